//! Tokenization, stopword filtering and n-gram generation.
//!
//! The tokenizer is deliberately simple: NFC-normalize, split on Unicode
//! whitespace, strip leading/trailing punctuation and symbols, lowercase
//! ASCII. That is enough for Bangla social-media text, where words are
//! whitespace-separated and the danda / Latin punctuation cling to word
//! edges. Interior punctuation (hyphens, hasanta sequences rendered with
//! ZWNJ, apostrophes) is left alone.

use std::collections::HashSet;

use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// A single surface token. Guaranteed non-empty, free of whitespace,
/// NFC-normalized, edge-trimmed and ASCII-lowercased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A contiguous run of `order` tokens joined by a single space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NGram {
    term: String,
    order: usize,
}

impl NGram {
    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Set of surface forms to drop during stopword filtering.
///
/// Entries are NFC-normalized at construction so membership tests reduce to
/// exact string equality against already-normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    /// Builds a stoplist from newline-separated entries. Blank lines and
    /// lines starting with '#' are ignored; surrounding whitespace is
    /// trimmed.
    pub fn from_lines(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.nfc().collect::<String>())
            .collect();
        Stoplist { words }
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().nfc().collect::<String>())
            .collect();
        Stoplist { words }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> std::io::Result<Self> {
        Ok(Self::from_lines(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries in sorted order, for stable serialization.
    pub fn sorted_words(&self) -> Vec<String> {
        let mut v: Vec<String> = self.words.iter().cloned().collect();
        v.sort();
        v
    }
}

/// The Bangla stopword list bundled with the toolkit (also shipped as
/// `data/bn_stopwords.txt`).
pub fn default_bangla_stoplist() -> Stoplist {
    Stoplist::from_lines(include_str!("../data/bn_stopwords.txt"))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid n-gram range {lo}..={hi}: need 1 <= lo <= hi")]
pub struct NgramRangeError {
    pub lo: usize,
    pub hi: usize,
}

fn is_edge_trim(c: char) -> bool {
    matches!(
        c.general_category_group(),
        GeneralCategoryGroup::Punctuation | GeneralCategoryGroup::Symbol
    )
}

/// Splits raw text into normalized tokens. Empty input (or input that is
/// all whitespace/punctuation) yields an empty vector, never an error.
pub fn tokenize(text: &str) -> Vec<Token> {
    let normalized: String = text.nfc().collect();
    normalized
        .split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(is_edge_trim);
            if trimmed.is_empty() {
                None
            } else {
                Some(Token(trimmed.to_ascii_lowercase()))
            }
        })
        .collect()
}

/// Drops tokens found in `stoplist`, preserving the order of the rest.
pub fn remove_stopwords(tokens: &[Token], stoplist: &Stoplist) -> Vec<Token> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t.as_str()))
        .cloned()
        .collect()
}

/// Enumerates all n-grams of order `lo..=hi`, grouped by increasing order
/// and in source order within each order. Sequences shorter than an order
/// simply contribute no n-grams of that order.
pub fn ngrams(tokens: &[Token], lo: usize, hi: usize) -> Result<Vec<NGram>, NgramRangeError> {
    if lo < 1 || lo > hi {
        return Err(NgramRangeError { lo, hi });
    }
    let mut out = Vec::new();
    for order in lo..=hi {
        if tokens.len() < order {
            continue;
        }
        for window in tokens.windows(order) {
            let term = window
                .iter()
                .map(Token::as_str)
                .collect::<Vec<_>>()
                .join(" ");
            out.push(NGram { term, order });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token(w.to_string())).collect()
    }

    #[test]
    fn tokenize_empty_and_whitespace() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t \n ").is_empty());
    }

    #[test]
    fn tokenize_strips_edge_punctuation() {
        let got = tokenize("ami valo!");
        assert_eq!(got, toks(&["ami", "valo"]));
        let got = tokenize("ki?? darun...");
        assert_eq!(got, toks(&["ki", "darun"]));
    }

    #[test]
    fn tokenize_keeps_interior_punctuation() {
        let got = tokenize("e-mail kor");
        assert_eq!(got, toks(&["e-mail", "kor"]));
    }

    #[test]
    fn tokenize_pure_punctuation_token_disappears() {
        assert_eq!(tokenize("bhalo !! achi"), toks(&["bhalo", "achi"]));
    }

    #[test]
    fn tokenize_lowercases_ascii_only() {
        assert_eq!(tokenize("Khub Bhalo OK"), toks(&["khub", "bhalo", "ok"]));
    }

    #[test]
    fn tokenize_strips_bangla_danda_and_currency() {
        // danda U+0964 is Po, taka sign U+09F3 is Sc; both are edge-trimmed
        let got = tokenize("ভালো। ৳১০০");
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].as_str(), "ভালো");
        assert_eq!(got[1].as_str(), "১০০");
    }

    #[test]
    fn tokenize_applies_nfc() {
        // e + combining acute (NFD) must normalize to the precomposed form
        let got = tokenize("cafe\u{0301}");
        assert_eq!(got[0].as_str(), "caf\u{e9}");
    }

    #[test]
    fn tokenize_is_idempotent_on_its_own_output() {
        let sentences = [
            "ami valo!",
            "ki?? darun...",
            "আমি খুব খুশি।",
            "e-mail kor: ekhon!!",
            "৳৫০ দাম",
        ];
        for s in sentences {
            let once = tokenize(s);
            let rejoined = once
                .iter()
                .map(Token::as_str)
                .collect::<Vec<_>>()
                .join(" ");
            assert_eq!(tokenize(&rejoined), once, "not idempotent for {s:?}");
        }
    }

    #[test]
    fn stopword_filter_keeps_order_and_drops_all_matches() {
        let stop = Stoplist::from_words(["ami", "o"]);
        let input = toks(&["ami", "khub", "o", "bhalo", "ami"]);
        assert_eq!(remove_stopwords(&input, &stop), toks(&["khub", "bhalo"]));
    }

    #[test]
    fn stopword_filter_on_empty_stoplist_is_identity() {
        let input = toks(&["ami", "khub", "bhalo"]);
        assert_eq!(remove_stopwords(&input, &Stoplist::default()), input);
    }

    #[test]
    fn stoplist_normalizes_entries_to_nfc() {
        // NFD entry must still match the NFC token form
        let stop = Stoplist::from_words(["cafe\u{0301}"]);
        assert!(stop.contains("caf\u{e9}"));
    }

    #[test]
    fn bundled_stoplist_is_nonempty() {
        let stop = default_bangla_stoplist();
        assert!(stop.len() >= 50);
        assert!(stop.contains("আমি"));
    }

    #[test]
    fn ngrams_a_b_c_orders_one_to_two() {
        let got = ngrams(&toks(&["a", "b", "c"]), 1, 2).unwrap();
        let terms: Vec<(&str, usize)> = got.iter().map(|g| (g.term(), g.order())).collect();
        assert_eq!(
            terms,
            vec![("a", 1), ("b", 1), ("c", 1), ("a b", 2), ("b c", 2)]
        );
    }

    #[test]
    fn ngrams_order_too_large_for_sequence() {
        let got = ngrams(&toks(&["a"]), 2, 3).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn ngrams_empty_token_list() {
        assert!(ngrams(&[], 1, 3).unwrap().is_empty());
    }

    #[test]
    fn ngrams_rejects_bad_ranges() {
        assert!(ngrams(&toks(&["a"]), 0, 2).is_err());
        assert!(ngrams(&toks(&["a"]), 2, 1).is_err());
    }

    #[test]
    fn unigrams_are_tokens_in_order() {
        let input = toks(&["x", "y", "x"]);
        let got = ngrams(&input, 1, 1).unwrap();
        assert_eq!(got.len(), input.len());
        for (g, t) in got.iter().zip(&input) {
            assert_eq!(g.term(), t.as_str());
            assert_eq!(g.order(), 1);
        }
    }

    proptest! {
        #[test]
        fn ngram_count_formula(len in 0usize..40, lo in 1usize..4, span in 0usize..3) {
            let hi = lo + span;
            let tokens: Vec<Token> = (0..len).map(|i| Token(format!("t{i}"))).collect();
            let got = ngrams(&tokens, lo, hi).unwrap();
            let expected: usize = (lo..=hi).map(|n| len.saturating_sub(n - 1)).sum();
            prop_assert_eq!(got.len(), expected);
        }

        #[test]
        fn tokens_never_contain_whitespace_or_uppercase_ascii(s in "\\PC{0,60}") {
            for t in tokenize(&s) {
                prop_assert!(!t.as_str().is_empty());
                prop_assert!(!t.as_str().chars().any(char::is_whitespace));
                prop_assert!(!t.as_str().chars().any(|c| c.is_ascii_uppercase()));
            }
        }
    }
}
