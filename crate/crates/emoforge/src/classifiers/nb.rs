//! Multinomial naive Bayes with Laplace smoothing.
//!
//! Feature weights act as (possibly fractional) term counts, so the same
//! estimator serves raw counts and tf-idf features. With per-class weight
//! mass `W_ct = Σ_docs(c) x_t`:
//!
//!   P(t | c) = (W_ct + α) / (Σ_t W_ct + α·V)
//!   score(c) = ln P(c) + Σ_t x_t · ln P(t | c)
//!
//! Negative weights are rejected at fit time; zero vectors fall back to the
//! prior argmax.

use serde::{Deserialize, Serialize};

use super::{sorted_classes, validate_training_set, ClassifierError};
use crate::corpus::EmotionLabel;
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    classes: Vec<EmotionLabel>,
    dim: usize,
    alpha: f64,
    log_priors: Vec<f64>,
    log_likelihoods: Vec<Vec<f64>>,
}

impl NbModel {
    pub fn classes(&self) -> &[EmotionLabel] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn prior(&self, class: usize) -> f64 {
        self.log_priors[class].exp()
    }

    pub fn likelihood(&self, class: usize, feature: usize) -> f64 {
        self.log_likelihoods[class][feature].exp()
    }

    pub fn predict(&self, x: &SparseVector) -> Result<EmotionLabel, ClassifierError> {
        nb_predict(self, x)
    }

    pub fn predict_batch(
        &self,
        xs: &[SparseVector],
    ) -> Result<Vec<EmotionLabel>, ClassifierError> {
        xs.iter().map(|x| nb_predict(self, x)).collect()
    }
}

/// Estimates priors and smoothed per-class term distributions.
pub fn nb_fit(
    x: &[SparseVector],
    y: &[EmotionLabel],
    alpha: f64,
) -> Result<NbModel, ClassifierError> {
    let dim = validate_training_set(x, y)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ClassifierError::InvalidAlpha { alpha });
    }
    for (doc, v) in x.iter().enumerate() {
        if let Some(&(feature, weight)) = v.entries().iter().find(|&&(_, w)| w < 0.0) {
            return Err(ClassifierError::NegativeWeight { doc, feature, weight });
        }
    }

    let classes = sorted_classes(y);
    let class_idx = |l: &EmotionLabel| classes.binary_search(l).expect("label seen in fit");
    let n_classes = classes.len();
    let mut weight_mass = vec![vec![0.0f64; dim]; n_classes];
    let mut doc_counts = vec![0u64; n_classes];
    for (v, l) in x.iter().zip(y) {
        let c = class_idx(l);
        doc_counts[c] += 1;
        v.add_scaled_into(1.0, &mut weight_mass[c]);
    }

    let n = x.len() as f64;
    let log_priors = doc_counts
        .iter()
        .map(|&c| (c as f64 / n).ln())
        .collect();
    let log_likelihoods = weight_mass
        .into_iter()
        .map(|mass| {
            let total: f64 = mass.iter().sum();
            let denominator = total + alpha * dim as f64;
            mass.into_iter()
                .map(|w| ((w + alpha) / denominator).ln())
                .collect()
        })
        .collect();

    Ok(NbModel {
        classes,
        dim,
        alpha,
        log_priors,
        log_likelihoods,
    })
}

/// Class with the highest posterior score; exact ties go to the
/// lexicographically smallest label (classes are stored sorted, so the
/// first maximal index wins).
pub fn nb_predict(model: &NbModel, x: &SparseVector) -> Result<EmotionLabel, ClassifierError> {
    if x.dim() != model.dim {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dim,
            got: x.dim(),
        });
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for c in 0..model.classes.len() {
        let mut score = model.log_priors[c];
        for &(t, w) in x.entries() {
            score += w * model.log_likelihoods[c][t];
        }
        if score > best_score {
            best_score = score;
            best = c;
        }
    }
    Ok(model.classes[best].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> EmotionLabel {
        EmotionLabel::new(s).unwrap()
    }

    fn sv(dim: usize, entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_entries(dim, entries.to_vec()).unwrap()
    }

    /// Two-feature corpus: P docs use "good" (feature 0), the N doc uses
    /// "bad" (feature 1). All estimates below are hand computations.
    fn toy_model() -> NbModel {
        let x = vec![
            sv(2, &[(0, 2.0)]), // P: good good
            sv(2, &[(0, 1.0)]), // P: good
            sv(2, &[(1, 1.0)]), // N: bad
        ];
        let y = vec![label("P"), label("P"), label("N")];
        nb_fit(&x, &y, 1.0).unwrap()
    }

    #[test]
    fn priors_and_likelihoods_match_hand_computation() {
        let model = toy_model();
        assert_eq!(model.classes(), &[label("N"), label("P")]);
        let (n, p) = (0, 1);
        assert!((model.prior(p) - 2.0 / 3.0).abs() < 1e-12);
        assert!((model.prior(n) - 1.0 / 3.0).abs() < 1e-12);
        // W(good|P)=3, total 3, V=2: (3+1)/(3+2)
        assert!((model.likelihood(p, 0) - 0.8).abs() < 1e-12);
        assert!((model.likelihood(p, 1) - 0.2).abs() < 1e-12);
        // W(bad|N)=1, total 1: (1+1)/(1+2)
        assert!((model.likelihood(n, 1) - 2.0 / 3.0).abs() < 1e-12);
        assert!((model.likelihood(n, 0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn predicts_by_posterior() {
        let model = toy_model();
        // "good": P score 2/3·0.8 vs N score 1/3·1/3
        assert_eq!(model.predict(&sv(2, &[(0, 1.0)])).unwrap(), label("P"));
        // "bad": P score 2/3·0.2 ≈ 0.133 vs N score 1/3·2/3 ≈ 0.222
        assert_eq!(model.predict(&sv(2, &[(1, 1.0)])).unwrap(), label("N"));
        // "bad bad" doubles down on N
        assert_eq!(model.predict(&sv(2, &[(1, 2.0)])).unwrap(), label("N"));
    }

    #[test]
    fn fractional_weights_are_honored() {
        // tf-idf-like fractional masses; hand-check one likelihood
        let x = vec![sv(2, &[(0, 0.5)]), sv(2, &[(1, 0.25)])];
        let y = vec![label("A"), label("B")];
        let model = nb_fit(&x, &y, 1.0).unwrap();
        // class A: W=[0.5, 0], total 0.5 → P(f0|A) = 1.5/2.5
        assert!((model.likelihood(0, 0) - 0.6).abs() < 1e-12);
        assert!((model.likelihood(0, 1) - 0.4).abs() < 1e-12);
        assert_eq!(model.predict(&sv(2, &[(0, 1.0)])).unwrap(), label("A"));
    }

    #[test]
    fn zero_vector_falls_back_to_prior_argmax() {
        let model = toy_model();
        assert_eq!(model.predict(&SparseVector::zeros(2)).unwrap(), label("P"));
    }

    #[test]
    fn equal_priors_zero_vector_ties_lexicographically() {
        let x = vec![sv(1, &[(0, 1.0)]), sv(1, &[(0, 1.0)])];
        let y = vec![label("zz"), label("aa")];
        let model = nb_fit(&x, &y, 1.0).unwrap();
        assert_eq!(model.predict(&SparseVector::zeros(1)).unwrap(), label("aa"));
    }

    #[test]
    fn smoothing_handles_unseen_features() {
        let model = toy_model();
        // a feature never seen with class N still has positive likelihood
        assert!(model.likelihood(0, 0) > 0.0);
        // and prediction on it cannot panic or produce -inf everywhere
        let got = model.predict(&sv(2, &[(0, 5.0), (1, 5.0)])).unwrap();
        assert!(got == label("P") || got == label("N"));
    }

    #[test]
    fn fit_validation() {
        let x = vec![sv(2, &[(0, 1.0)])];
        let y = vec![label("a")];
        assert_eq!(
            nb_fit(&x, &y, 0.0).unwrap_err(),
            ClassifierError::InvalidAlpha { alpha: 0.0 }
        );
        assert_eq!(
            nb_fit(&[], &[], 1.0).unwrap_err(),
            ClassifierError::EmptyTrainingSet
        );
        let neg = vec![sv(2, &[(1, -0.5)])];
        assert_eq!(
            nb_fit(&neg, &y, 1.0).unwrap_err(),
            ClassifierError::NegativeWeight { doc: 0, feature: 1, weight: -0.5 }
        );
        let model = toy_model();
        assert!(matches!(
            model.predict(&SparseVector::zeros(5)).unwrap_err(),
            ClassifierError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn likelihood_rows_sum_to_one() {
        let model = toy_model();
        for c in 0..model.classes().len() {
            let sum: f64 = (0..model.dim()).map(|t| model.likelihood(c, t)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn serde_round_trip() {
        let model = toy_model();
        let json = serde_json::to_string(&model).unwrap();
        let back: NbModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }
}
