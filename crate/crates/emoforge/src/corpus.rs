//! Corpus loading, persistence and stratified splitting.
//!
//! Two interchange formats are supported: JSONL (one `{"id","text","label"}`
//! object per line) and TSV (`id<TAB>label<TAB>text`). Parse errors always
//! carry the offending line number. A corpus also carries its label
//! inventory — either derived from the documents or supplied explicitly —
//! and every document label must belong to it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("emotion label must be non-empty")]
    EmptyLabel,
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("duplicate document id {id:?}")]
    DuplicateId { id: String },
    #[error("label {label:?} is not in the corpus inventory")]
    UnknownLabel { label: String },
    #[error("label inventory must contain at least 2 labels, got {got}")]
    TooFewLabels { got: usize },
    #[error("invalid split ratio {given:?}: expected TRAIN:TEST with both parts >= 1")]
    InvalidRatio { given: String },
    #[error("class {label:?} has {count} documents; stratified split needs at least 2 per class")]
    ClassTooSmall { label: String, count: usize },
    #[error("cannot serialize to TSV: {msg}")]
    TsvUnrepresentable { msg: String },
}

/// A class label such as `happy` or `disgust`. Non-empty by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EmotionLabel(String);

impl EmotionLabel {
    pub fn new(name: impl Into<String>) -> Result<Self, CorpusError> {
        let name = name.into();
        if name.is_empty() {
            return Err(CorpusError::EmptyLabel);
        }
        Ok(EmotionLabel(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EmotionLabel {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, CorpusError> {
        EmotionLabel::new(s)
    }
}

impl From<EmotionLabel> for String {
    fn from(l: EmotionLabel) -> String {
        l.0
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub text: String,
    pub label: EmotionLabel,
}

/// An in-memory labeled corpus plus its label inventory (always sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<LabeledDocument>,
    labels: Vec<EmotionLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension (`.jsonl`/`.json` or `.tsv`).
    pub fn from_path(path: &Path) -> Option<CorpusFormat> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" => Some(CorpusFormat::Jsonl),
            "tsv" | "txt" => Some(CorpusFormat::Tsv),
            _ => None,
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

/// Train/test proportion for [`Corpus::stratified_split`], e.g. `5:1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub test: u32,
}

impl SplitRatio {
    pub fn new(train: u32, test: u32) -> Result<Self, CorpusError> {
        if train == 0 || test == 0 {
            return Err(CorpusError::InvalidRatio {
                given: format!("{train}:{test}"),
            });
        }
        Ok(SplitRatio { train, test })
    }

    pub fn parse(s: &str) -> Result<Self, CorpusError> {
        let bad = || CorpusError::InvalidRatio { given: s.to_string() };
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let train: u32 = a.trim().parse().map_err(|_| bad())?;
        let test: u32 = b.trim().parse().map_err(|_| bad())?;
        SplitRatio::new(train, test)
    }
}

impl fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.train, self.test)
    }
}

/// Simple data-quality counters reported by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub n_empty_text: usize,
    pub per_class: BTreeMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from documents, deriving the (sorted) inventory from
    /// the observed labels unless an explicit one is given. Rejects empty
    /// document lists, duplicate ids, labels outside an explicit inventory,
    /// and inventories with fewer than two labels.
    pub fn new(
        docs: Vec<LabeledDocument>,
        inventory: Option<Vec<EmotionLabel>>,
    ) -> Result<Corpus, CorpusError> {
        if docs.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut seen = std::collections::HashSet::new();
        for d in &docs {
            if !seen.insert(d.id.as_str()) {
                return Err(CorpusError::DuplicateId { id: d.id.clone() });
            }
        }
        let labels = match inventory {
            Some(mut inv) => {
                inv.sort();
                inv.dedup();
                for d in &docs {
                    if !inv.contains(&d.label) {
                        return Err(CorpusError::UnknownLabel {
                            label: d.label.as_str().to_string(),
                        });
                    }
                }
                inv
            }
            None => {
                let mut inv: Vec<EmotionLabel> = docs.iter().map(|d| d.label.clone()).collect();
                inv.sort();
                inv.dedup();
                inv
            }
        };
        if labels.len() < 2 {
            return Err(CorpusError::TooFewLabels { got: labels.len() });
        }
        Ok(Corpus { docs, labels })
    }

    pub fn docs(&self) -> &[LabeledDocument] {
        &self.docs
    }

    /// The label inventory, sorted lexicographically.
    pub fn labels(&self) -> &[EmotionLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Count of documents per observed label. Labels with no documents do
    /// not appear; the sum of the values is always `len()`.
    pub fn class_distribution(&self) -> BTreeMap<EmotionLabel, usize> {
        let mut map = BTreeMap::new();
        for d in &self.docs {
            *map.entry(d.label.clone()).or_insert(0) += 1;
        }
        map
    }

    pub fn stats(&self) -> CorpusStats {
        let per_class = self
            .class_distribution()
            .into_iter()
            .map(|(k, v)| (k.as_str().to_string(), v))
            .collect();
        CorpusStats {
            n_docs: self.docs.len(),
            n_empty_text: self.docs.iter().filter(|d| d.text.is_empty()).count(),
            per_class,
        }
    }

    /// Splits into (train, test) per class: each class is shuffled with a
    /// ChaCha8 generator seeded from `seed` and `floor(n * test_parts /
    /// (train_parts + test_parts))` of its documents go to test, the rest to
    /// train — rounding always favors train. Classes are visited in sorted
    /// label order, so the same seed always yields the same split. Both
    /// halves keep the parent inventory and the original document order.
    pub fn stratified_split(
        &self,
        ratio: SplitRatio,
        seed: u64,
    ) -> Result<(Corpus, Corpus), CorpusError> {
        let mut by_label: BTreeMap<&EmotionLabel, Vec<usize>> =
            self.labels.iter().map(|l| (l, Vec::new())).collect();
        for (i, d) in self.docs.iter().enumerate() {
            by_label
                .get_mut(&d.label)
                .expect("document label outside inventory")
                .push(i);
        }
        for (label, idxs) in &by_label {
            if idxs.len() < 2 {
                return Err(CorpusError::ClassTooSmall {
                    label: label.as_str().to_string(),
                    count: idxs.len(),
                });
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = u64::from(ratio.train) + u64::from(ratio.test);
        let mut in_test = vec![false; self.docs.len()];
        for idxs in by_label.values_mut() {
            idxs.shuffle(&mut rng);
            let n_test = (idxs.len() as u64 * u64::from(ratio.test) / parts) as usize;
            for &i in idxs.iter().take(n_test) {
                in_test[i] = true;
            }
        }

        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, d) in self.docs.iter().enumerate() {
            if in_test[i] {
                test.push(d.clone());
            } else {
                train.push(d.clone());
            }
        }
        let inv = self.labels.clone();
        Ok((
            Corpus::new(train, Some(inv.clone()))?,
            Corpus::new(test, Some(inv))?,
        ))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDoc {
    id: String,
    text: String,
    label: String,
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_docs(
    path: &Path,
    content: &str,
    format: CorpusFormat,
) -> Result<Vec<LabeledDocument>, CorpusError> {
    let err = |line: usize, msg: String| CorpusError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut docs = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    for (i, raw_line) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.is_empty() {
            return Err(err(line_no, "empty line".to_string()));
        }
        let (id, label, text) = match format {
            CorpusFormat::Jsonl => {
                let raw: RawDoc = serde_json::from_str(line)
                    .map_err(|e| err(line_no, format!("invalid JSON record: {e}")))?;
                (raw.id, raw.label, raw.text)
            }
            CorpusFormat::Tsv => {
                let mut parts = line.splitn(3, '\t');
                let id = parts.next().unwrap_or_default();
                let label = parts.next();
                let text = parts.next();
                match (label, text) {
                    (Some(label), Some(text)) => {
                        (id.to_string(), label.to_string(), text.to_string())
                    }
                    _ => {
                        return Err(err(
                            line_no,
                            "expected 3 tab-separated fields: id, label, text".to_string(),
                        ))
                    }
                }
            }
        };
        if id.is_empty() {
            return Err(err(line_no, "document id must be non-empty".to_string()));
        }
        if let Some(prev) = ids.insert(id.clone(), line_no) {
            return Err(err(
                line_no,
                format!("duplicate document id {id:?} (first seen on line {prev})"),
            ));
        }
        let label = EmotionLabel::new(label)
            .map_err(|_| err(line_no, "label must be non-empty".to_string()))?;
        docs.push(LabeledDocument { id, text, label });
    }
    Ok(docs)
}

/// Loads a corpus, deriving the label inventory from the observed labels.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let docs = parse_docs(path, &read_file(path)?, format)?;
    Corpus::new(docs, None)
}

/// Loads a corpus against an explicit inventory; any document whose label
/// falls outside it is an error.
pub fn load_corpus_with_inventory(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    inventory: Vec<EmotionLabel>,
) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let docs = parse_docs(path, &read_file(path)?, format)?;
    Corpus::new(docs, Some(inventory))
}

/// Writes a corpus in the given format. The output is canonical (stable
/// field order, one record per line, trailing newline), so save → load →
/// save is byte-identical.
pub fn save_corpus(
    corpus: &Corpus,
    path: impl AsRef<Path>,
    format: CorpusFormat,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = String::new();
    for d in corpus.docs() {
        match format {
            CorpusFormat::Jsonl => {
                let raw = RawDoc {
                    id: d.id.clone(),
                    text: d.text.clone(),
                    label: d.label.as_str().to_string(),
                };
                out.push_str(&serde_json::to_string(&raw).expect("document serializes"));
            }
            CorpusFormat::Tsv => {
                for (field, name) in [(d.id.as_str(), "id"), (d.label.as_str(), "label")] {
                    if field.contains(['\t', '\n', '\r']) {
                        return Err(CorpusError::TsvUnrepresentable {
                            msg: format!("{name} {field:?} contains a tab or newline"),
                        });
                    }
                }
                if d.text.contains(['\n', '\r']) {
                    return Err(CorpusError::TsvUnrepresentable {
                        msg: format!("text of document {:?} contains a newline", d.id),
                    });
                }
                out.push_str(&format!("{}\t{}\t{}", d.id, d.label, d.text));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One POS-annotated sentence: a non-empty list of (surface, tag) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<(String, String)>,
}

/// Reads a tagged corpus in the one-token-per-line format: each line is
/// `surface<TAB>tag`, sentences are separated by a single blank line, and a
/// trailing blank line after the last sentence is permitted.
pub fn load_tagged_corpus(path: impl AsRef<Path>) -> Result<Vec<TaggedSentence>, CorpusError> {
    let path = path.as_ref();
    let content = read_file(path)?;
    let err = |line: usize, msg: String| CorpusError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut sentences = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    for (i, raw_line) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.is_empty() {
            if current.is_empty() {
                return Err(err(line_no, "empty sentence block".to_string()));
            }
            sentences.push(TaggedSentence {
                tokens: std::mem::take(&mut current),
            });
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(surface), Some(tag), None) if !surface.is_empty() && !tag.is_empty() => {
                current.push((surface.to_string(), tag.to_string()));
            }
            _ => {
                return Err(err(
                    line_no,
                    "expected exactly 2 tab-separated fields: surface, tag".to_string(),
                ))
            }
        }
    }
    if !current.is_empty() {
        sentences.push(TaggedSentence { tokens: current });
    }
    Ok(sentences)
}
