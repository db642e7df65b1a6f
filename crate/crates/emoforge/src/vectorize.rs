//! Bag-of-n-grams vectorization: vocabulary fitting, count and tf-idf
//! weighting, and feature-union concatenation.
//!
//! Vectors are sparse throughout; with a few thousand documents and
//! n-gram vocabularies in the tens of thousands, dense matrices would be
//! almost entirely zeros.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::NGram;

#[derive(Debug, thiserror::Error)]
pub enum VectorizeError {
    #[error("cannot fit a vocabulary: no documents or all documents are empty")]
    EmptyVocabulary,
    #[error("sparse entries must be sorted by strictly increasing index (position {position})")]
    UnsortedEntries { position: usize },
    #[error("sparse index {index} out of bounds for dimension {dim}")]
    IndexOutOfBounds { index: usize, dim: usize },
    #[error("sparse weight at index {index} is not finite")]
    NonFiniteWeight { index: usize },
    #[error("feature union needs at least one block")]
    EmptyUnion,
}

/// Sparse feature vector: a fixed dimension plus `(index, weight)` pairs
/// sorted by strictly increasing index, with no explicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector { dim, entries: Vec::new() }
    }

    /// Validates ordering, bounds and finiteness; entries with weight
    /// exactly 0.0 are dropped rather than stored.
    pub fn from_entries(
        dim: usize,
        entries: Vec<(usize, f64)>,
    ) -> Result<SparseVector, VectorizeError> {
        let mut last: Option<usize> = None;
        for (position, &(index, weight)) in entries.iter().enumerate() {
            if index >= dim {
                return Err(VectorizeError::IndexOutOfBounds { index, dim });
            }
            if !weight.is_finite() {
                return Err(VectorizeError::NonFiniteWeight { index });
            }
            if let Some(prev) = last {
                if index <= prev {
                    return Err(VectorizeError::UnsortedEntries { position });
                }
            }
            last = Some(index);
        }
        let entries = entries.into_iter().filter(|&(_, w)| w != 0.0).collect();
        Ok(SparseVector { dim, entries })
    }

    fn from_sorted_map(dim: usize, map: BTreeMap<usize, f64>) -> SparseVector {
        let entries = map.into_iter().filter(|&(_, w)| w != 0.0).collect();
        SparseVector { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, wa) = self.entries[i];
            let (ib, wb) = other.entries[j];
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// ||a - b||² computed via ||a||² + ||b||² - 2⟨a,b⟩.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        (self.norm_squared() + other.norm_squared() - 2.0 * self.dot(other)).max(0.0)
    }

    /// Scales so the L2 norm is 1; the zero vector is returned unchanged.
    pub fn into_l2_normalized(mut self) -> SparseVector {
        let norm = self.norm();
        if norm > 0.0 {
            for entry in &mut self.entries {
                entry.1 /= norm;
            }
        }
        self
    }

    /// Adds `self` (optionally scaled) into a dense accumulator of length `dim`.
    pub fn add_scaled_into(&self, scale: f64, acc: &mut [f64]) {
        debug_assert_eq!(acc.len(), self.dim);
        for &(i, w) in &self.entries {
            acc[i] += scale * w;
        }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }
}

/// Term → index map with document frequencies, fitted on a training set.
/// Indices follow first-seen order over the training documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    index: HashMap<String, usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn df(&self, index: usize) -> u32 {
        self.df[index]
    }

    /// Smoothed inverse document frequency:
    /// `ln((1 + n_docs) / (1 + df)) + 1`. Always positive, and never a
    /// division by zero even for terms seen in every document.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + f64::from(self.df[index]))).ln() + 1.0
    }
}

// Serialized as {n_docs, terms: [[term, df], ...]} with the array position
// encoding the index, so a round trip preserves first-seen order exactly.
#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    n_docs: usize,
    terms: Vec<(String, u32)>,
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .cloned()
            .zip(self.df.iter().copied())
            .collect();
        VocabularyRepr { n_docs: self.n_docs, terms }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = VocabularyRepr::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        let mut df = Vec::with_capacity(repr.terms.len());
        let mut index = HashMap::with_capacity(repr.terms.len());
        for (i, (term, d)) in repr.terms.into_iter().enumerate() {
            if index.insert(term.clone(), i).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate vocabulary term {term:?}"
                )));
            }
            terms.push(term);
            df.push(d);
        }
        Ok(Vocabulary { terms, df, index, n_docs: repr.n_docs })
    }
}

/// Fits a vocabulary over tokenized documents (each a bag of n-grams).
/// Documents may be empty, but at least one term must exist overall.
pub fn fit_vocabulary(docs: &[Vec<NGram>]) -> Result<Vocabulary, VectorizeError> {
    let mut terms: Vec<String> = Vec::new();
    let mut df: Vec<u32> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen_in_doc: Vec<usize> = Vec::new();
    for doc in docs {
        seen_in_doc.clear();
        for gram in doc {
            let idx = *index.entry(gram.term().to_string()).or_insert_with(|| {
                terms.push(gram.term().to_string());
                df.push(0);
                terms.len() - 1
            });
            if !seen_in_doc.contains(&idx) {
                seen_in_doc.push(idx);
                df[idx] += 1;
            }
        }
    }
    if terms.is_empty() {
        return Err(VectorizeError::EmptyVocabulary);
    }
    Ok(Vocabulary { terms, df, index, n_docs: docs.len() })
}

/// Raw term-count vector; terms outside the vocabulary are skipped.
pub fn transform_count(doc: &[NGram], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for gram in doc {
        if let Some(i) = vocab.index_of(gram.term()) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    SparseVector::from_sorted_map(vocab.len(), counts)
}

/// tf-idf vector: raw counts scaled by smoothed idf, then L2-normalized.
/// A document with no in-vocabulary terms maps to the zero vector.
pub fn transform_tfidf(doc: &[NGram], vocab: &Vocabulary) -> SparseVector {
    let mut counts = transform_count(doc, vocab);
    for entry in &mut counts.entries {
        entry.1 *= vocab.idf(entry.0);
    }
    counts.into_l2_normalized()
}

/// Concatenates per-block vectors into one, offsetting each block's indices
/// by the total dimension of the blocks before it.
pub fn feature_union(parts: &[SparseVector]) -> Result<SparseVector, VectorizeError> {
    if parts.is_empty() {
        return Err(VectorizeError::EmptyUnion);
    }
    let dim = parts.iter().map(SparseVector::dim).sum();
    let mut entries = Vec::with_capacity(parts.iter().map(SparseVector::nnz).sum());
    let mut offset = 0;
    for part in parts {
        for &(i, w) in part.entries() {
            entries.push((offset + i, w));
        }
        offset += part.dim();
    }
    Ok(SparseVector { dim, entries })
}
