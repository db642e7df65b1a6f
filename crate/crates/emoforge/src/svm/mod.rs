//! Support vector machines: a simplified-SMO binary solver with linear and
//! RBF kernels, wrapped by a one-vs-one multiclass voter.

mod multiclass;
mod smo;

pub use multiclass::{ovo_fit, ovo_predict, MulticlassSvmModel};
pub use smo::{decision_function, smo_train, BinarySvmModel, SmoParams};

use serde::{Deserialize, Serialize};

use crate::vectorize::SparseVector;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SvmError {
    #[error("feature matrix and label list differ in length: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("training set must contain at least 2 points, got {got}")]
    TooFewPoints { got: usize },
    #[error("binary labels must be exactly +1 or -1; index {index} is {value}")]
    InvalidLabel { index: usize, value: f64 },
    #[error("training set contains a single class; need both +1 and -1")]
    SingleClass,
    #[error("penalty C must be positive and finite, got {c}")]
    InvalidC { c: f64 },
    #[error("RBF gamma must be positive and finite, got {gamma}")]
    InvalidGamma { gamma: f64 },
    #[error("vector dimension {got} does not match the model's {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("SMO failed to converge after {sweeps} sweeps ({stagnant} consecutive without progress)")]
    NonConvergence { sweeps: usize, stagnant: usize },
    #[error("one-vs-one needs at least 2 classes, got {got}")]
    TooFewClasses { got: usize },
    #[error("class {label:?} has no training samples")]
    EmptyClass { label: String },
    #[error("label {label:?} is not in the declared class list")]
    UnknownClass { label: String },
}

/// Kernel used by both the binary solver and the one-vs-one wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Rbf { gamma } if gamma.is_finite() && gamma > 0.0 => Ok(()),
            Kernel::Rbf { gamma } => Err(SvmError::InvalidGamma { gamma }),
        }
    }

    /// Kernel value given the precomputed squared norms of both vectors
    /// (the RBF distance uses ||a||² + ||b||² - 2⟨a,b⟩).
    #[inline]
    pub(crate) fn eval_with_norms(&self, a: &SparseVector, b: &SparseVector, na2: f64, nb2: f64) -> f64 {
        match *self {
            Kernel::Linear => a.dot(b),
            Kernel::Rbf { gamma } => {
                let d2 = (na2 + nb2 - 2.0 * a.dot(b)).max(0.0);
                (-gamma * d2).exp()
            }
        }
    }
}

/// Evaluates the kernel on two vectors, validating dimensions and the
/// kernel parameters.
pub fn kernel_eval(kernel: &Kernel, a: &SparseVector, b: &SparseVector) -> Result<f64, SvmError> {
    kernel.validate()?;
    if a.dim() != b.dim() {
        return Err(SvmError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(kernel.eval_with_norms(a, b, a.norm_squared(), b.norm_squared()))
}
