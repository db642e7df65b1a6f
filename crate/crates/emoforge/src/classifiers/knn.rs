//! k-nearest-neighbours under cosine similarity.
//!
//! Vote resolution is layered: most votes among the k nearest wins; a vote
//! tie falls back to the larger summed similarity; an exact similarity tie
//! falls back to the lexicographically smallest label. Neighbour selection
//! itself breaks distance ties toward the lower training index.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sorted_classes, validate_training_set, ClassifierError};
use crate::corpus::EmotionLabel;
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    dim: usize,
    vectors: Vec<SparseVector>,
    labels: Vec<EmotionLabel>,
    norms: Vec<f64>,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn classes(&self) -> Vec<EmotionLabel> {
        sorted_classes(&self.labels)
    }

    pub fn predict(&self, query: &SparseVector) -> Result<EmotionLabel, ClassifierError> {
        knn_predict(self, query)
    }

    /// Predicts a batch in parallel; the output order matches the input.
    pub fn predict_batch(
        &self,
        queries: &[SparseVector],
    ) -> Result<Vec<EmotionLabel>, ClassifierError> {
        queries.par_iter().map(|q| knn_predict(self, q)).collect()
    }
}

/// Memorizes the training set. `k` must lie in `1..=n_train`.
pub fn knn_fit(
    x: Vec<SparseVector>,
    y: Vec<EmotionLabel>,
    k: usize,
) -> Result<KnnModel, ClassifierError> {
    let dim = validate_training_set(&x, &y)?;
    if k == 0 || k > x.len() {
        return Err(ClassifierError::InvalidK { k, n: x.len() });
    }
    let norms = x.iter().map(SparseVector::norm).collect();
    Ok(KnnModel {
        k,
        dim,
        vectors: x,
        labels: y,
        norms,
    })
}

fn cosine(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        dot / (norm_a * norm_b)
    }
}

pub fn knn_predict(model: &KnnModel, query: &SparseVector) -> Result<EmotionLabel, ClassifierError> {
    if query.dim() != model.dim {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dim,
            got: query.dim(),
        });
    }
    let query_norm = query.norm();
    let mut scored: Vec<(f64, usize)> = model
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (cosine(query.dot(v), query_norm, model.norms[i]), i))
        .collect();
    // descending similarity, ascending index on ties; similarities are
    // never NaN (zero norms map to similarity 0)
    scored.sort_unstable_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("cosine similarity is never NaN")
            .then(a.1.cmp(&b.1))
    });

    let mut tally: BTreeMap<&EmotionLabel, (usize, f64)> = BTreeMap::new();
    for &(sim, idx) in scored.iter().take(model.k) {
        let entry = tally.entry(&model.labels[idx]).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += sim;
    }
    let mut best: Option<(&EmotionLabel, usize, f64)> = None;
    for (label, &(votes, sim_sum)) in &tally {
        let better = match best {
            None => true,
            Some((_, bv, bs)) => votes > bv || (votes == bv && sim_sum > bs),
        };
        if better {
            best = Some((label, votes, sim_sum));
        }
    }
    Ok(best.expect("k >= 1 guarantees at least one vote").0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> EmotionLabel {
        EmotionLabel::new(s).unwrap()
    }

    fn vec2(a: f64, b: f64) -> SparseVector {
        let mut entries = Vec::new();
        if a != 0.0 {
            entries.push((0, a));
        }
        if b != 0.0 {
            entries.push((1, b));
        }
        SparseVector::from_entries(2, entries).unwrap()
    }

    fn toy_model(k: usize) -> KnnModel {
        // two tight direction clusters: x-axis is "pos", y-axis is "neg"
        let x = vec![
            vec2(1.0, 0.0),
            vec2(0.9, 0.1),
            vec2(0.0, 1.0),
            vec2(0.1, 0.9),
        ];
        let y = vec![label("pos"), label("pos"), label("neg"), label("neg")];
        knn_fit(x, y, k).unwrap()
    }

    #[test]
    fn nearest_neighbour_wins_at_k1() {
        let model = toy_model(1);
        assert_eq!(model.predict(&vec2(2.0, 0.0)).unwrap(), label("pos"));
        assert_eq!(model.predict(&vec2(0.0, 0.5)).unwrap(), label("neg"));
    }

    #[test]
    fn majority_wins_at_k3() {
        let model = toy_model(3);
        // both pos points are closer in angle than the second neg point
        assert_eq!(model.predict(&vec2(1.0, 0.05)).unwrap(), label("pos"));
    }

    #[test]
    fn cosine_ignores_magnitude() {
        let model = toy_model(1);
        let short = model.predict(&vec2(0.001, 0.0004)).unwrap();
        let long = model.predict(&vec2(1000.0, 400.0)).unwrap();
        assert_eq!(short, long);
    }

    #[test]
    fn vote_tie_falls_back_to_similarity_sum() {
        // k=2 with one neighbour per class; the query leans toward neg
        let x = vec![vec2(1.0, 0.0), vec2(0.0, 1.0)];
        let y = vec![label("pos"), label("neg")];
        let model = knn_fit(x, y, 2).unwrap();
        assert_eq!(model.predict(&vec2(0.4, 0.6)).unwrap(), label("neg"));
        assert_eq!(model.predict(&vec2(0.6, 0.4)).unwrap(), label("pos"));
    }

    #[test]
    fn full_tie_falls_back_to_lexicographic_label() {
        // perfectly symmetric: equal votes, equal similarity sums
        let x = vec![vec2(1.0, 0.0), vec2(0.0, 1.0)];
        let y = vec![label("zzz"), label("aaa")];
        let model = knn_fit(x, y, 2).unwrap();
        assert_eq!(model.predict(&vec2(0.5, 0.5)).unwrap(), label("aaa"));
    }

    #[test]
    fn zero_query_votes_with_first_k_training_points() {
        // all similarities are exactly 0, so selection order is by index
        let x = vec![
            vec2(1.0, 0.0),
            vec2(0.9, 0.2),
            vec2(0.0, 1.0),
        ];
        let y = vec![label("pos"), label("pos"), label("neg")];
        let model = knn_fit(x, y, 2).unwrap();
        assert_eq!(model.predict(&vec2(0.0, 0.0)).unwrap(), label("pos"));
    }

    #[test]
    fn zero_training_vector_scores_zero_similarity() {
        let x = vec![vec2(0.0, 0.0), vec2(0.0, 1.0)];
        let y = vec![label("zero"), label("axis")];
        let model = knn_fit(x, y, 1).unwrap();
        assert_eq!(model.predict(&vec2(0.0, 3.0)).unwrap(), label("axis"));
    }

    #[test]
    fn fit_validation() {
        let x = vec![vec2(1.0, 0.0)];
        let y = vec![label("a")];
        assert_eq!(
            knn_fit(x.clone(), y.clone(), 2).unwrap_err(),
            ClassifierError::InvalidK { k: 2, n: 1 }
        );
        assert_eq!(
            knn_fit(x.clone(), y.clone(), 0).unwrap_err(),
            ClassifierError::InvalidK { k: 0, n: 1 }
        );
        assert_eq!(
            knn_fit(vec![], vec![], 1).unwrap_err(),
            ClassifierError::EmptyTrainingSet
        );
        assert_eq!(
            knn_fit(x.clone(), vec![label("a"), label("b")], 1).unwrap_err(),
            ClassifierError::LengthMismatch { x: 1, y: 2 }
        );
        let model = knn_fit(x, y, 1).unwrap();
        let wrong = SparseVector::zeros(9);
        assert_eq!(
            model.predict(&wrong).unwrap_err(),
            ClassifierError::DimensionMismatch { expected: 2, got: 9 }
        );
    }

    #[test]
    fn batch_matches_single_predictions() {
        let model = toy_model(3);
        let queries = vec![vec2(1.0, 0.2), vec2(0.3, 1.0), vec2(0.0, 0.0)];
        let batch = model.predict_batch(&queries).unwrap();
        for (q, b) in queries.iter().zip(&batch) {
            assert_eq!(model.predict(q).unwrap(), *b);
        }
    }

    /// Brute-force re-implementation used as an oracle: recompute all
    /// similarities, sort, tally — sharing no code with the real predictor.
    fn brute_force(
        x: &[SparseVector],
        y: &[EmotionLabel],
        k: usize,
        q: &SparseVector,
    ) -> EmotionLabel {
        let mut sims: Vec<(f64, usize)> = x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (na, nb) = (q.norm(), v.norm());
                let s = if na == 0.0 || nb == 0.0 { 0.0 } else { q.dot(v) / (na * nb) };
                (s, i)
            })
            .collect();
        sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut per_label: BTreeMap<String, (usize, f64)> = BTreeMap::new();
        for &(s, i) in sims.iter().take(k) {
            let e = per_label.entry(y[i].as_str().to_string()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += s;
        }
        let best = per_label
            .iter()
            .max_by(|a, b| {
                (a.1 .0)
                    .cmp(&b.1 .0)
                    .then(a.1 .1.partial_cmp(&b.1 .1).unwrap())
                    .then(b.0.cmp(a.0))
            })
            .unwrap();
        EmotionLabel::new(best.0.clone()).unwrap()
    }

    #[test]
    fn agrees_with_brute_force_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let names = ["a", "b", "c"];
        for round in 0..25 {
            let n = rng.random_range(5..30);
            let dim = rng.random_range(2..6);
            let make = |rng: &mut rand_chacha::ChaCha8Rng| {
                let entries: Vec<(usize, f64)> = (0..dim)
                    .filter_map(|i| {
                        if rng.random_range(0.0..1.0) < 0.6 {
                            Some((i, rng.random_range(0.1..2.0)))
                        } else {
                            None
                        }
                    })
                    .collect();
                SparseVector::from_entries(dim, entries).unwrap()
            };
            let x: Vec<SparseVector> = (0..n).map(|_| make(&mut rng)).collect();
            let y: Vec<EmotionLabel> = (0..n)
                .map(|_| label(names[rng.random_range(0..names.len())]))
                .collect();
            for k in [1, 3, 5] {
                if k > n {
                    continue;
                }
                let model = knn_fit(x.clone(), y.clone(), k).unwrap();
                for _ in 0..5 {
                    let q = make(&mut rng);
                    assert_eq!(
                        model.predict(&q).unwrap(),
                        brute_force(&x, &y, k, &q),
                        "round {round}, k={k}"
                    );
                }
            }
        }
    }
}
