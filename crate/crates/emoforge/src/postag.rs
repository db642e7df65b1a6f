//! Bigram hidden-Markov POS tagging with add-α smoothing and Viterbi
//! decoding, plus the tag-based token filter used for feature extraction.
//!
//! Probabilities (all smoothed, so never zero):
//!   π(t)    = (first(t) + α) / (n_sentences + α·|T|)
//!   A(p→t)  = (count(p→t) + α) / (count(p→·) + α·|T|)
//!   B(t, w) = (count(t, w) + α) / (count(t) + α·(|W|+1))
//! where the emission vocabulary is augmented with one unknown pseudo-word,
//! so any word a tag never emitted — in or out of vocabulary — scores
//! α / (count(t) + α·(|W|+1)).
//!
//! Word surfaces are canonicalized the same way the tokenizer emits them
//! (NFC, ASCII lowercased); tags are kept verbatim.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::TaggedSentence;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HmmError {
    #[error("cannot train on an empty set of sentences")]
    EmptyTrainingSet,
    #[error("sentence {index} in the training set has no tokens")]
    EmptySentence { index: usize },
    #[error("smoothing constant must be positive and finite, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("cannot decode an empty token sequence")]
    EmptyInput,
    #[error("token and tag sequences differ in length: {tokens} vs {tags}")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("accuracy needs at least one gold sentence")]
    EmptyGold,
}

fn canonical(word: &str) -> String {
    word.nfc().collect::<String>().to_ascii_lowercase()
}

/// Trained bigram HMM. Counts are the source of truth; the log-probability
/// tables are derived on construction and after deserialization, so a
/// persisted model reproduces decoding exactly.
#[derive(Debug, Clone)]
pub struct HmmModel {
    tags: Vec<String>,
    words: Vec<String>,
    alpha: f64,
    n_sentences: u64,
    initial_counts: Vec<u64>,
    transition_counts: Vec<Vec<u64>>,
    emission_counts: Vec<Vec<(u32, u64)>>,
    // derived
    word_ids: HashMap<String, u32>,
    log_pi: Vec<f64>,
    log_a: Vec<Vec<f64>>,
    log_b: Vec<HashMap<u32, f64>>,
    log_b_default: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HmmRepr {
    alpha: f64,
    n_sentences: u64,
    tags: Vec<String>,
    words: Vec<String>,
    initial_counts: Vec<u64>,
    transition_counts: Vec<Vec<u64>>,
    emission_counts: Vec<Vec<(u32, u64)>>,
}

impl Serialize for HmmModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        HmmRepr {
            alpha: self.alpha,
            n_sentences: self.n_sentences,
            tags: self.tags.clone(),
            words: self.words.clone(),
            initial_counts: self.initial_counts.clone(),
            transition_counts: self.transition_counts.clone(),
            emission_counts: self.emission_counts.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HmmModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = HmmRepr::deserialize(deserializer)?;
        HmmModel::finalize(
            r.tags,
            r.words,
            r.alpha,
            r.n_sentences,
            r.initial_counts,
            r.transition_counts,
            r.emission_counts,
        )
        .map_err(serde::de::Error::custom)
    }
}

impl HmmModel {
    fn finalize(
        tags: Vec<String>,
        words: Vec<String>,
        alpha: f64,
        n_sentences: u64,
        initial_counts: Vec<u64>,
        transition_counts: Vec<Vec<u64>>,
        emission_counts: Vec<Vec<(u32, u64)>>,
    ) -> Result<HmmModel, String> {
        let n_tags = tags.len();
        if n_tags == 0 {
            return Err("model has no tags".to_string());
        }
        if initial_counts.len() != n_tags
            || transition_counts.len() != n_tags
            || transition_counts.iter().any(|r| r.len() != n_tags)
            || emission_counts.len() != n_tags
        {
            return Err("count table dimensions do not match the tag set".to_string());
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(format!("invalid smoothing constant {alpha}"));
        }

        let word_ids: HashMap<String, u32> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let t = n_tags as f64;
        let vocab_plus_unk = (words.len() + 1) as f64;

        let pi_denominator = n_sentences as f64 + alpha * t;
        let log_pi = initial_counts
            .iter()
            .map(|&c| ((c as f64 + alpha) / pi_denominator).ln())
            .collect();

        let log_a = transition_counts
            .iter()
            .map(|row| {
                let out_total: u64 = row.iter().sum();
                let denominator = out_total as f64 + alpha * t;
                row.iter()
                    .map(|&c| ((c as f64 + alpha) / denominator).ln())
                    .collect()
            })
            .collect();

        let mut log_b = Vec::with_capacity(n_tags);
        let mut log_b_default = Vec::with_capacity(n_tags);
        for row in &emission_counts {
            let total: u64 = row.iter().map(|&(_, c)| c).sum();
            let denominator = total as f64 + alpha * vocab_plus_unk;
            log_b.push(
                row.iter()
                    .map(|&(w, c)| (w, ((c as f64 + alpha) / denominator).ln()))
                    .collect::<HashMap<u32, f64>>(),
            );
            log_b_default.push((alpha / denominator).ln());
        }

        Ok(HmmModel {
            tags,
            words,
            alpha,
            n_sentences,
            initial_counts,
            transition_counts,
            emission_counts,
            word_ids,
            log_pi,
            log_a,
            log_b,
            log_b_default,
        })
    }

    /// Tag names, sorted lexicographically; indices used throughout the API.
    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn vocab_len(&self) -> usize {
        self.words.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn initial_logp(&self, tag: usize) -> f64 {
        self.log_pi[tag]
    }

    pub fn transition_logp(&self, from: usize, to: usize) -> f64 {
        self.log_a[from][to]
    }

    /// Log emission probability; `word` is canonicalized first.
    pub fn emission_logp(&self, tag: usize, word: &str) -> f64 {
        self.emission_logp_id(tag, self.word_id(word))
    }

    fn word_id(&self, word: &str) -> Option<u32> {
        self.word_ids.get(&canonical(word)).copied()
    }

    fn emission_logp_id(&self, tag: usize, word: Option<u32>) -> f64 {
        word.and_then(|id| self.log_b[tag].get(&id).copied())
            .unwrap_or(self.log_b_default[tag])
    }
}

impl PartialEq for HmmModel {
    fn eq(&self, other: &Self) -> bool {
        self.tags == other.tags
            && self.words == other.words
            && self.alpha == other.alpha
            && self.n_sentences == other.n_sentences
            && self.initial_counts == other.initial_counts
            && self.transition_counts == other.transition_counts
            && self.emission_counts == other.emission_counts
    }
}

/// Estimates a bigram HMM from tagged sentences with add-α smoothing.
pub fn train_hmm(sentences: &[TaggedSentence], alpha: f64) -> Result<HmmModel, HmmError> {
    if sentences.is_empty() {
        return Err(HmmError::EmptyTrainingSet);
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(HmmError::InvalidAlpha { alpha });
    }
    for (index, s) in sentences.iter().enumerate() {
        if s.tokens.is_empty() {
            return Err(HmmError::EmptySentence { index });
        }
    }

    let mut tags: Vec<String> = sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(|(_, t)| t.clone()))
        .collect();
    tags.sort();
    tags.dedup();
    let mut words: Vec<String> = sentences
        .iter()
        .flat_map(|s| s.tokens.iter().map(|(w, _)| canonical(w)))
        .collect();
    words.sort();
    words.dedup();

    let tag_idx: HashMap<&str, usize> =
        tags.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let word_idx: HashMap<&str, u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();

    let n_tags = tags.len();
    let mut initial_counts = vec![0u64; n_tags];
    let mut transition_counts = vec![vec![0u64; n_tags]; n_tags];
    let mut emission_maps: Vec<HashMap<u32, u64>> = vec![HashMap::new(); n_tags];
    for s in sentences {
        let mut prev: Option<usize> = None;
        for (word, tag) in &s.tokens {
            let t = tag_idx[tag.as_str()];
            let w = word_idx[canonical(word).as_str()];
            match prev {
                None => initial_counts[t] += 1,
                Some(p) => transition_counts[p][t] += 1,
            }
            *emission_maps[t].entry(w).or_insert(0) += 1;
            prev = Some(t);
        }
    }
    let emission_counts = emission_maps
        .into_iter()
        .map(|m| {
            let mut v: Vec<(u32, u64)> = m.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();

    let model = HmmModel::finalize(
        tags,
        words,
        alpha,
        sentences.len() as u64,
        initial_counts,
        transition_counts,
        emission_counts,
    )
    .expect("tables built from validated sentences are consistent");
    Ok(model)
}

/// Most probable tag sequence under the model, by log-space Viterbi.
/// When several predecessors (or final states) score identically, the
/// lowest tag index — the lexicographically smallest tag — wins.
pub fn viterbi<S: AsRef<str>>(model: &HmmModel, tokens: &[S]) -> Result<Vec<String>, HmmError> {
    if tokens.is_empty() {
        return Err(HmmError::EmptyInput);
    }
    let n_tags = model.n_tags();
    let word_ids: Vec<Option<u32>> =
        tokens.iter().map(|w| model.word_id(w.as_ref())).collect();

    let mut score = vec![vec![f64::NEG_INFINITY; n_tags]; tokens.len()];
    let mut back = vec![vec![0usize; n_tags]; tokens.len()];
    for t in 0..n_tags {
        score[0][t] = model.initial_logp(t) + model.emission_logp_id(t, word_ids[0]);
    }
    for i in 1..tokens.len() {
        for t in 0..n_tags {
            let mut best_prev = 0;
            let mut best = score[i - 1][0] + model.transition_logp(0, t);
            for p in 1..n_tags {
                let cand = score[i - 1][p] + model.transition_logp(p, t);
                if cand > best {
                    best = cand;
                    best_prev = p;
                }
            }
            score[i][t] = best + model.emission_logp_id(t, word_ids[i]);
            back[i][t] = best_prev;
        }
    }

    let last = tokens.len() - 1;
    let mut best_tag = 0;
    for t in 1..n_tags {
        if score[last][t] > score[last][best_tag] {
            best_tag = t;
        }
    }
    let mut path = vec![0usize; tokens.len()];
    path[last] = best_tag;
    for i in (1..tokens.len()).rev() {
        path[i - 1] = back[i][path[i]];
    }
    Ok(path.into_iter().map(|t| model.tags[t].clone()).collect())
}

/// Keeps exactly the tokens whose predicted tag is in `keep`, preserving
/// order. `tokens` and `tags` must be parallel sequences.
pub fn pos_filter<T: Clone + AsRef<str>>(
    tokens: &[T],
    tags: &[String],
    keep: &BTreeSet<String>,
) -> Result<Vec<T>, HmmError> {
    if tokens.len() != tags.len() {
        return Err(HmmError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    Ok(tokens
        .iter()
        .zip(tags)
        .filter(|(_, tag)| keep.contains(tag.as_str()))
        .map(|(tok, _)| tok.clone())
        .collect())
}

/// The content-bearing tag set kept by default for emotion features:
/// adjectives, compound markers, main verbs, proper nouns and the
/// adverb/negation group.
pub fn default_keep_tags() -> BTreeSet<String> {
    ["JJ", "CX", "VM", "NP", "AMN"]
        .into_iter()
        .map(str::to_string)
        .collect()
}

/// Token-level accuracy of Viterbi decoding against gold tags.
pub fn tag_accuracy(model: &HmmModel, gold: &[TaggedSentence]) -> Result<f64, HmmError> {
    if gold.is_empty() {
        return Err(HmmError::EmptyGold);
    }
    let mut correct = 0u64;
    let mut total = 0u64;
    for (index, s) in gold.iter().enumerate() {
        if s.tokens.is_empty() {
            return Err(HmmError::EmptySentence { index });
        }
        let surfaces: Vec<&str> = s.tokens.iter().map(|(w, _)| w.as_str()).collect();
        let predicted = viterbi(model, &surfaces)?;
        total += s.tokens.len() as u64;
        correct += s
            .tokens
            .iter()
            .zip(&predicted)
            .filter(|((_, gold_tag), pred)| gold_tag == *pred)
            .count() as u64;
    }
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(pairs: &[(&str, &str)]) -> TaggedSentence {
        TaggedSentence {
            tokens: pairs
                .iter()
                .map(|(w, t)| (w.to_string(), t.to_string()))
                .collect(),
        }
    }

    #[test]
    fn one_sentence_smoothed_probabilities() {
        // hand-computed add-1 estimates for [(the,D), (dog,N)]
        let model = train_hmm(&[sentence(&[("the", "D"), ("dog", "N")])], 1.0).unwrap();
        assert_eq!(model.tags(), ["D", "N"]);
        let d = 0;
        let n = 1;
        // π(D) = (1+1)/(1+2), π(N) = (0+1)/(1+2)
        assert!((model.initial_logp(d).exp() - 2.0 / 3.0).abs() < 1e-12);
        assert!((model.initial_logp(n).exp() - 1.0 / 3.0).abs() < 1e-12);
        // A(D→N) = (1+1)/(1+2); D was a transition source exactly once
        assert!((model.transition_logp(d, n).exp() - 2.0 / 3.0).abs() < 1e-12);
        assert!((model.transition_logp(d, d).exp() - 1.0 / 3.0).abs() < 1e-12);
        // N was never a source: uniform (0+1)/(0+2)
        assert!((model.transition_logp(n, d).exp() - 0.5).abs() < 1e-12);
        // B(D,the) = (1+1)/(1+3); |W|=2 plus the unknown pseudo-word
        assert!((model.emission_logp(d, "the").exp() - 0.5).abs() < 1e-12);
        // zero-count in-vocabulary word and unknown word score the same
        assert!((model.emission_logp(d, "dog").exp() - 0.25).abs() < 1e-12);
        assert!((model.emission_logp(d, "zebra").exp() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn distributions_sum_to_one() {
        let corpus = vec![
            sentence(&[("ami", "PR"), ("khub", "AMN"), ("khushi", "JJ")]),
            sentence(&[("se", "PR"), ("gelo", "VM")]),
            sentence(&[("khushi", "JJ"), ("ami", "PR")]),
        ];
        let model = train_hmm(&corpus, 0.7).unwrap();
        let pi_sum: f64 = (0..model.n_tags()).map(|t| model.initial_logp(t).exp()).sum();
        assert!((pi_sum - 1.0).abs() < 1e-12);
        for p in 0..model.n_tags() {
            let row: f64 = (0..model.n_tags())
                .map(|t| model.transition_logp(p, t).exp())
                .sum();
            assert!((row - 1.0).abs() < 1e-12, "transition row {p}");
            // emissions over the vocabulary plus one unknown slot
            let b_sum: f64 = model
                .words
                .iter()
                .map(|w| model.emission_logp(p, w).exp())
                .sum::<f64>()
                + model.log_b_default[p].exp();
            assert!((b_sum - 1.0).abs() < 1e-12, "emission row {p}");
        }
    }

    #[test]
    fn viterbi_decodes_unambiguous_corpus() {
        let corpus = vec![
            sentence(&[("the", "D"), ("dog", "N"), ("runs", "V")]),
            sentence(&[("the", "D"), ("cat", "N"), ("sleeps", "V")]),
            sentence(&[("a", "D"), ("dog", "N"), ("sleeps", "V")]),
        ];
        let model = train_hmm(&corpus, 0.1).unwrap();
        let tags = viterbi(&model, &["the", "cat", "runs"]).unwrap();
        assert_eq!(tags, ["D", "N", "V"]);
        // unknown word in a known context still gets a sensible tag
        let tags = viterbi(&model, &["the", "wolf", "runs"]).unwrap();
        assert_eq!(tags[0], "D");
        assert_eq!(tags[2], "V");
    }

    #[test]
    fn viterbi_ties_pick_lexicographically_smaller_tag() {
        // two tags with perfectly symmetric counts: every comparison ties,
        // so the decode must fall back to the smaller tag at each step
        let corpus = vec![sentence(&[("w", "XB")]), sentence(&[("w", "XA")])];
        let model = train_hmm(&corpus, 1.0).unwrap();
        assert_eq!(viterbi(&model, &["w"]).unwrap(), ["XA"]);
        assert_eq!(viterbi(&model, &["w", "w"]).unwrap(), ["XA", "XA"]);
    }

    #[test]
    fn viterbi_canonicalizes_input_like_training() {
        let model = train_hmm(&[sentence(&[("The", "D"), ("Dog", "N")])], 1.0).unwrap();
        // mixed case at decode time must hit the same emission entries
        let a = viterbi(&model, &["THE", "DOG"]).unwrap();
        let b = viterbi(&model, &["the", "dog"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn train_and_decode_errors() {
        assert_eq!(train_hmm(&[], 1.0).unwrap_err(), HmmError::EmptyTrainingSet);
        let s = vec![sentence(&[("a", "T"), ("b", "U")])];
        assert_eq!(
            train_hmm(&s, 0.0).unwrap_err(),
            HmmError::InvalidAlpha { alpha: 0.0 }
        );
        assert_eq!(
            train_hmm(&s, -1.0).unwrap_err(),
            HmmError::InvalidAlpha { alpha: -1.0 }
        );
        let bad = vec![TaggedSentence { tokens: vec![] }];
        assert_eq!(
            train_hmm(&bad, 1.0).unwrap_err(),
            HmmError::EmptySentence { index: 0 }
        );
        let model = train_hmm(&s, 1.0).unwrap();
        assert_eq!(
            viterbi(&model, &[] as &[&str]).unwrap_err(),
            HmmError::EmptyInput
        );
    }

    #[test]
    fn pos_filter_keeps_matching_tokens_in_order() {
        let tokens = ["ami", "khub", "khushi"];
        let tags: Vec<String> = ["PR", "AMN", "JJ"].iter().map(|s| s.to_string()).collect();
        let got = pos_filter(&tokens, &tags, &default_keep_tags()).unwrap();
        assert_eq!(got, ["khub", "khushi"]);
    }

    #[test]
    fn pos_filter_length_mismatch() {
        let tags: Vec<String> = vec!["JJ".to_string()];
        let e = pos_filter(&["a", "b"], &tags, &default_keep_tags()).unwrap_err();
        assert_eq!(e, HmmError::LengthMismatch { tokens: 2, tags: 1 });
    }

    #[test]
    fn tag_accuracy_on_training_data_of_unambiguous_corpus() {
        let corpus = vec![
            sentence(&[("the", "D"), ("dog", "N")]),
            sentence(&[("a", "D"), ("cat", "N")]),
            sentence(&[("the", "D"), ("cat", "N")]),
        ];
        let model = train_hmm(&corpus, 0.01).unwrap();
        let acc = tag_accuracy(&model, &corpus).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(tag_accuracy(&model, &[]).unwrap_err(), HmmError::EmptyGold);
    }

    #[test]
    fn serde_round_trip_preserves_decoding() {
        let corpus = vec![
            sentence(&[("ami", "PR"), ("khushi", "JJ")]),
            sentence(&[("se", "PR"), ("gelo", "VM"), ("na", "AMN")]),
        ];
        let model = train_hmm(&corpus, 0.5).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: HmmModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        let input = ["ami", "gelo", "mystery"];
        assert_eq!(viterbi(&back, &input).unwrap(), viterbi(&model, &input).unwrap());
        for t in 0..model.n_tags() {
            assert_eq!(back.initial_logp(t), model.initial_logp(t));
            assert_eq!(back.emission_logp(t, "mystery"), model.emission_logp(t, "mystery"));
        }
    }

    #[test]
    fn viterbi_matches_exhaustive_enumeration_small() {
        // brute-force oracle over all |T|^n sequences, scoring with the
        // model's own log tables; the DP must find a maximal sequence
        let corpus = vec![
            sentence(&[("a", "T1"), ("b", "T2"), ("a", "T1")]),
            sentence(&[("b", "T2"), ("b", "T3")]),
            sentence(&[("c", "T3"), ("a", "T1")]),
        ];
        let model = train_hmm(&corpus, 0.9).unwrap();
        let inputs: &[&[&str]] = &[&["a"], &["a", "b"], &["b", "c", "a"], &["c", "c", "c", "b"]];
        for tokens in inputs {
            let got = viterbi(&model, tokens).unwrap();
            let (best_seq, best_score) = enumerate_best(&model, tokens);
            let got_score = score_sequence(&model, tokens, &got);
            assert!(
                (got_score - best_score).abs() < 1e-9,
                "suboptimal decode for {tokens:?}: {got:?} vs {best_seq:?}"
            );
        }
    }

    fn score_sequence(model: &HmmModel, tokens: &[&str], tags: &[String]) -> f64 {
        let idx: Vec<usize> = tags
            .iter()
            .map(|t| model.tags().iter().position(|m| m == t).unwrap())
            .collect();
        let mut s = model.initial_logp(idx[0]) + model.emission_logp(idx[0], tokens[0]);
        for i in 1..tokens.len() {
            s += model.transition_logp(idx[i - 1], idx[i])
                + model.emission_logp(idx[i], tokens[i]);
        }
        s
    }

    fn enumerate_best(model: &HmmModel, tokens: &[&str]) -> (Vec<String>, f64) {
        let n_tags = model.n_tags();
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut seq = vec![0usize; tokens.len()];
        loop {
            let tags: Vec<String> = seq.iter().map(|&t| model.tags()[t].clone()).collect();
            let s = score_sequence(model, tokens, &tags);
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((seq.clone(), s));
            }
            // odometer increment over tag indices
            let mut pos = 0;
            loop {
                if pos == seq.len() {
                    let (bi, bs) = best.unwrap();
                    let tags = bi.into_iter().map(|t| model.tags()[t].clone()).collect();
                    return (tags, bs);
                }
                seq[pos] += 1;
                if seq[pos] < n_tags {
                    break;
                }
                seq[pos] = 0;
                pos += 1;
            }
        }
    }
}
