//! The three vector-space classifiers: cosine k-nearest-neighbours,
//! multinomial naive Bayes, and a Gini-impurity CART decision tree.
//!
//! All of them consume [`SparseVector`](crate::vectorize::SparseVector)
//! features and [`EmotionLabel`](crate::corpus::EmotionLabel) targets, and
//! every tie — vote ties, score ties, equal split gains — resolves
//! deterministically, so repeated runs give identical predictions.

mod knn;
mod nb;
mod tree;

pub use knn::{knn_fit, knn_predict, KnnModel};
pub use nb::{nb_fit, nb_predict, NbModel};
pub use tree::{tree_fit, tree_predict, TreeModel, TreeParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClassifierError {
    #[error("feature matrix and label list differ in length: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k must satisfy 1 <= k <= n_train; got k={k} with {n} training points")]
    InvalidK { k: usize, n: usize },
    #[error("vector dimension {got} does not match the model's {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative feature weight {weight} in document {doc} at feature {feature}")]
    NegativeWeight {
        doc: usize,
        feature: usize,
        weight: f64,
    },
    #[error("smoothing constant must be positive and finite, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("invalid tree parameters: {msg}")]
    InvalidParams { msg: String },
}

/// Checks the shared fit-time invariants: parallel non-empty inputs and a
/// consistent feature dimension across all training vectors.
fn validate_training_set(
    x: &[crate::vectorize::SparseVector],
    y: &[crate::corpus::EmotionLabel],
) -> Result<usize, ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let dim = x[0].dim();
    for v in x {
        if v.dim() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
    }
    Ok(dim)
}

/// Distinct labels of `y` in sorted order — the class index space used by
/// every model in this module.
fn sorted_classes(y: &[crate::corpus::EmotionLabel]) -> Vec<crate::corpus::EmotionLabel> {
    let mut classes: Vec<_> = y.to_vec();
    classes.sort();
    classes.dedup();
    classes
}
