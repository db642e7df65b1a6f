//! Binary soft-margin SVM trained by sequential minimal optimization, in
//! the simplified Platt variant: working pairs are the first KKT violator
//! in a seeded random sweep order, paired with the point maximizing
//! |E_i - E_j| (falling back to a full randomized scan when that step makes
//! no progress).
//!
//! The error cache is updated incrementally after every successful step and
//! recomputed exactly at the start of each sweep, so the convergence
//! certificate — one full sweep that finds no violator — is based on exact
//! error values. If a sweep finds violators but no pair can move (and that
//! repeats `max_passes` times), training aborts with a `NonConvergence`
//! error rather than returning a silently unconverged model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Kernel, SvmError};
use crate::vectorize::SparseVector;

/// Minimum change in an alpha for a step to count as progress.
const STEP_EPS: f64 = 1e-9;

/// Alphas below this are treated as exactly zero when extracting support
/// vectors (clipping leaves non-SVs at 0.0; this only filters float dust).
const SV_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Consecutive stagnant sweeps (violators found, no step possible)
    /// tolerated before reporting non-convergence.
    pub max_passes: usize,
    /// Hard cap on total sweeps.
    pub max_sweeps: usize,
    /// Seed for the per-sweep index shuffles.
    pub seed: u64,
    /// Precompute the full Gram matrix when n is at most this.
    pub gram_cache_limit: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
            max_sweeps: 10_000,
            seed: 42,
            gram_cache_limit: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub(crate) kernel: Kernel,
    pub(crate) c: f64,
    pub(crate) dim: usize,
    pub(crate) support_vectors: Vec<SparseVector>,
    /// α_i·y_i per support vector.
    pub(crate) coefficients: Vec<f64>,
    /// Training-set index of each support vector.
    pub(crate) support_indices: Vec<usize>,
    pub(crate) bias: f64,
    pub(crate) sweeps: usize,
}

impl BinarySvmModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    /// `α_i·y_i` for each support vector.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    /// Sweeps the solver ran before certifying convergence.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Σ α_i·y_i over the support vectors — zero (up to float dust) for a
    /// converged solution.
    pub fn sum_alpha_y(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    pub fn decision(&self, x: &SparseVector) -> Result<f64, SvmError> {
        decision_function(self, x)
    }
}

/// f(x) = Σ α_i y_i K(sv_i, x) + b.
pub fn decision_function(model: &BinarySvmModel, x: &SparseVector) -> Result<f64, SvmError> {
    if x.dim() != model.dim {
        return Err(SvmError::DimensionMismatch {
            expected: model.dim,
            got: x.dim(),
        });
    }
    let x_norm2 = x.norm_squared();
    let sum: f64 = model
        .support_vectors
        .iter()
        .zip(&model.coefficients)
        .map(|(sv, &coef)| {
            coef * model.kernel.eval_with_norms(sv, x, sv.norm_squared(), x_norm2)
        })
        .sum();
    Ok(sum + model.bias)
}

/// Kernel value provider: full Gram matrix when the problem is small
/// enough, on-the-fly evaluation (with cached squared norms) otherwise.
struct KernelTable<'a> {
    x: &'a [SparseVector],
    kernel: Kernel,
    norms2: Vec<f64>,
    gram: Option<Vec<f64>>,
    n: usize,
}

impl<'a> KernelTable<'a> {
    fn new(x: &'a [SparseVector], kernel: Kernel, cache_limit: usize) -> Self {
        let n = x.len();
        let norms2: Vec<f64> = x.iter().map(SparseVector::norm_squared).collect();
        let gram = (n <= cache_limit).then(|| {
            let mut g = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval_with_norms(&x[i], &x[j], norms2[i], norms2[j]);
                    g[i * n + j] = v;
                    g[j * n + i] = v;
                }
            }
            g
        });
        KernelTable { x, kernel, norms2, gram, n }
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g[i * self.n + j],
            None => self
                .kernel
                .eval_with_norms(&self.x[i], &self.x[j], self.norms2[i], self.norms2[j]),
        }
    }
}

struct Solver<'a> {
    kt: KernelTable<'a>,
    y: &'a [f64],
    alpha: Vec<f64>,
    err: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    /// Tolerance for classifying an alpha as sitting on a box bound.
    bound_eps: f64,
    n: usize,
}

impl Solver<'_> {
    fn at_lower(&self, i: usize) -> bool {
        self.alpha[i] <= self.bound_eps
    }

    fn at_upper(&self, i: usize) -> bool {
        self.alpha[i] >= self.c - self.bound_eps
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.y[i] * self.err[i];
        (r < -self.tol && !self.at_upper(i)) || (r > self.tol && !self.at_lower(i))
    }

    /// Exact error recomputation: E_i = Σ_m α_m y_m K(m,i) + b - y_i.
    fn recompute_errors(&mut self) {
        let active: Vec<usize> = (0..self.n).filter(|&m| self.alpha[m] > 0.0).collect();
        for i in 0..self.n {
            let f: f64 = active
                .iter()
                .map(|&m| self.alpha[m] * self.y[m] * self.kt.k(m, i))
                .sum::<f64>()
                + self.b;
            self.err[i] = f - self.y[i];
        }
    }

    /// Joint optimization of (α_i, α_j); returns whether the pair moved.
    fn try_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ai_old, aj_old) = (self.alpha[i], self.alpha[j]);
        let (ei, ej) = (self.err[i], self.err[j]);

        let (lo, hi) = if yi != yj {
            ((aj_old - ai_old).max(0.0), (self.c + aj_old - ai_old).min(self.c))
        } else {
            ((ai_old + aj_old - self.c).max(0.0), (ai_old + aj_old).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let eta = self.kt.k(i, i) + self.kt.k(j, j) - 2.0 * self.kt.k(i, j);
        if eta <= 0.0 {
            // the simplified variant skips non-positive-curvature pairs
            return false;
        }
        let aj = (aj_old + yj * (ei - ej) / eta).clamp(lo, hi);
        if (aj - aj_old).abs() < STEP_EPS {
            return false;
        }
        let ai = ai_old + yi * yj * (aj_old - aj);

        let (di, dj) = (yi * (ai - ai_old), yj * (aj - aj_old));
        let k_ii = self.kt.k(i, i);
        let k_ij = self.kt.k(i, j);
        let k_jj = self.kt.k(j, j);
        let b1 = self.b - ei - di * k_ii - dj * k_ij;
        let b2 = self.b - ej - di * k_ij - dj * k_jj;
        let interior = |a: f64| a > self.bound_eps && a < self.c - self.bound_eps;
        let b_new = if interior(ai) {
            b1
        } else if interior(aj) {
            b2
        } else {
            (b1 + b2) / 2.0
        };

        let db = b_new - self.b;
        for m in 0..self.n {
            self.err[m] += di * self.kt.k(i, m) + dj * self.kt.k(j, m) + db;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        self.b = b_new;
        true
    }

    /// Second-choice heuristic: the j maximizing |E_i - E_j| (lowest index
    /// on ties), then every other j in a seeded random order.
    fn optimize_around(&mut self, i: usize, rng: &mut ChaCha8Rng) -> bool {
        let mut best_j = usize::MAX;
        let mut best_gap = -1.0;
        for j in 0..self.n {
            if j == i {
                continue;
            }
            let gap = (self.err[i] - self.err[j]).abs();
            if gap > best_gap {
                best_gap = gap;
                best_j = j;
            }
        }
        if best_j != usize::MAX && self.try_step(i, best_j) {
            return true;
        }
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        for j in order {
            if j == i || j == best_j {
                continue;
            }
            if self.try_step(i, j) {
                return true;
            }
        }
        false
    }

    /// Dual objective W(α) = Σα - ½ ΣΣ α_i α_j y_i y_j K_ij, used by the
    /// debug-mode monotonicity check.
    #[cfg(debug_assertions)]
    fn dual_objective(&self) -> f64 {
        let active: Vec<usize> = (0..self.n).filter(|&m| self.alpha[m] > 0.0).collect();
        let linear: f64 = active.iter().map(|&m| self.alpha[m]).sum();
        let mut quad = 0.0;
        for &i in &active {
            for &j in &active {
                quad += self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j] * self.kt.k(i, j);
            }
        }
        linear - 0.5 * quad
    }
}

/// Trains a binary soft-margin SVM. Labels must be exactly ±1 with both
/// classes present. On success every training point satisfies the KKT
/// conditions within `params.tol`.
pub fn smo_train(
    x: &[SparseVector],
    y: &[f64],
    kernel: Kernel,
    params: &SmoParams,
) -> Result<BinarySvmModel, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(SvmError::TooFewPoints { got: x.len() });
    }
    for (index, &value) in y.iter().enumerate() {
        if value != 1.0 && value != -1.0 {
            return Err(SvmError::InvalidLabel { index, value });
        }
    }
    if y.iter().all(|&v| v == 1.0) || y.iter().all(|&v| v == -1.0) {
        return Err(SvmError::SingleClass);
    }
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(SvmError::InvalidC { c: params.c });
    }
    kernel.validate()?;
    let dim = x[0].dim();
    for v in x {
        if v.dim() != dim {
            return Err(SvmError::DimensionMismatch { expected: dim, got: v.dim() });
        }
    }

    let n = x.len();
    let mut solver = Solver {
        kt: KernelTable::new(x, kernel, params.gram_cache_limit),
        y,
        alpha: vec![0.0; n],
        err: y.iter().map(|&v| -v).collect(),
        b: 0.0,
        c: params.c,
        tol: params.tol,
        bound_eps: 1e-8 * params.c.max(1.0),
        n,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stagnant = 0;
    let mut sweeps = 0;
    #[cfg(debug_assertions)]
    let mut prev_objective = f64::NEG_INFINITY;
    loop {
        if sweeps >= params.max_sweeps {
            return Err(SvmError::NonConvergence { sweeps, stagnant });
        }
        sweeps += 1;
        solver.recompute_errors();
        order.shuffle(&mut rng);

        let mut violators = 0usize;
        let mut changed = 0usize;
        for &i in &order {
            if !solver.violates_kkt(i) {
                continue;
            }
            violators += 1;
            if solver.optimize_around(i, &mut rng) {
                changed += 1;
            }
        }

        #[cfg(debug_assertions)]
        {
            let objective = solver.dual_objective();
            debug_assert!(
                objective >= prev_objective - 1e-7 * (1.0 + prev_objective.abs()),
                "dual objective decreased: {prev_objective} -> {objective}"
            );
            prev_objective = objective;
        }

        if violators == 0 {
            // no alpha moved this sweep, so the errors checked were exact:
            // every point satisfies KKT within tol
            break;
        }
        if changed == 0 {
            stagnant += 1;
            if stagnant >= params.max_passes {
                return Err(SvmError::NonConvergence { sweeps, stagnant });
            }
        } else {
            stagnant = 0;
        }
    }

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    let mut support_indices = Vec::new();
    for i in 0..n {
        if solver.alpha[i] > SV_EPS {
            support_vectors.push(x[i].clone());
            coefficients.push(solver.alpha[i] * y[i]);
            support_indices.push(i);
        }
    }
    Ok(BinarySvmModel {
        kernel,
        c: params.c,
        dim,
        support_vectors,
        coefficients,
        support_indices,
        bias: solver.b,
        sweeps,
    })
}
