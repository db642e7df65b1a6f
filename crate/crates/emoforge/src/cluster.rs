//! Lloyd's k-means with multiple seeded restarts.
//!
//! Each restart draws its initial centroids from an independent stream of
//! the same base seed (`set_stream(restart)`), so a run with `n_init = m`
//! explores exactly the first `m` streams regardless of thread scheduling,
//! and the best (lowest-inertia) restart wins deterministically.
//!
//! Point-to-centroid distances use the expansion
//! `d² = ‖x‖² − 2·x·c + ‖c‖²` with per-iteration cached centroid norms;
//! assignment ties go to the lowest centroid id. A cluster left empty by an
//! assignment step seizes the point currently farthest from its centroid
//! (taken from a cluster that can spare one).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vectorize::SparseVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("k must be at least 1, got {k}")]
    InvalidK { k: usize },
    #[error("need at least k = {k} points, got {got}")]
    TooFewPoints { k: usize, got: usize },
    #[error("{what} must be at least 1")]
    InvalidParams { what: &'static str },
    #[error("expected dimensionality {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot cluster an empty dataset")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    /// Number of restarts; the lowest-inertia run is kept.
    pub n_init: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams { k: 2, n_init: 1, max_iter: 300, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    centroids: Vec<Vec<f64>>,
    dim: usize,
    /// Sum of squared distances of each point to its final centroid.
    inertia: f64,
    /// Assignment iterations the winning restart ran.
    n_iter: usize,
    /// Which restart (RNG stream) produced the winning run.
    restart: usize,
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn n_iter(&self) -> usize {
        self.n_iter
    }

    pub fn restart(&self) -> usize {
        self.restart
    }
}

/// Nearest-centroid id for one point (ties -> lowest id).
fn nearest(x: &SparseVector, x_norm2: f64, centroids: &[Vec<f64>], c_norms2: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (cid, (c, &cn2)) in centroids.iter().zip(c_norms2).enumerate() {
        let d2 = (x_norm2 - 2.0 * x.dot_dense(c) + cn2).max(0.0);
        if d2 < best_d2 {
            best_d2 = d2;
            best = cid;
        }
    }
    (best, best_d2)
}

struct RunOutcome {
    centroids: Vec<Vec<f64>>,
    inertia: f64,
    n_iter: usize,
}

fn lloyd_once(
    x: &[SparseVector],
    x_norms2: &[f64],
    k: usize,
    max_iter: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> RunOutcome {
    let n = x.len();
    let dim = x[0].dim();

    let mut centroids: Vec<Vec<f64>> = rand::seq::index::sample(rng, n, k)
        .into_iter()
        .map(|i| {
            let mut c = vec![0.0; dim];
            x[i].add_scaled_into(1.0, &mut c);
            c
        })
        .collect();

    let mut assign = vec![usize::MAX; n];
    let mut n_iter = 0;
    for _ in 0..max_iter {
        n_iter += 1;
        let c_norms2: Vec<f64> = centroids.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        let new_assign: Vec<(usize, f64)> = x
            .iter()
            .zip(x_norms2)
            .map(|(xi, &xn2)| nearest(xi, xn2, &centroids, &c_norms2))
            .collect();
        let changed = new_assign
            .iter()
            .zip(&assign)
            .any(|(&(cid, _), &old)| cid != old);
        let mut d2s: Vec<f64> = Vec::with_capacity(n);
        for (i, &(cid, d2)) in new_assign.iter().enumerate() {
            assign[i] = cid;
            d2s.push(d2);
        }
        if !changed {
            break;
        }

        let mut counts = vec![0usize; k];
        for &cid in &assign {
            counts[cid] += 1;
        }
        // empty-cluster repair: hand the farthest point (from a cluster
        // that keeps at least one member) to each empty cluster
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut donor = usize::MAX;
            let mut donor_d2 = -1.0;
            for i in 0..n {
                if counts[assign[i]] > 1 && d2s[i] > donor_d2 {
                    donor_d2 = d2s[i];
                    donor = i;
                }
            }
            // pigeonhole: n >= k and some cluster is empty, so another
            // cluster holds at least two points
            counts[assign[donor]] -= 1;
            assign[donor] = empty;
            counts[empty] = 1;
            d2s[donor] = 0.0;
        }

        for c in &mut centroids {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        for (xi, &cid) in x.iter().zip(&assign) {
            xi.add_scaled_into(1.0, &mut centroids[cid]);
        }
        for (c, &count) in centroids.iter_mut().zip(&counts) {
            let inv = 1.0 / count as f64;
            c.iter_mut().for_each(|v| *v *= inv);
        }
    }

    // fresh assignment against the final centroids for the reported inertia
    let c_norms2: Vec<f64> = centroids.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let inertia = x
        .iter()
        .zip(x_norms2)
        .map(|(xi, &xn2)| nearest(xi, xn2, &centroids, &c_norms2).1)
        .sum();
    RunOutcome { centroids, inertia, n_iter }
}

pub fn kmeans_fit(x: &[SparseVector], params: &KMeansParams) -> Result<KMeansModel, ClusterError> {
    if x.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    if params.k == 0 {
        return Err(ClusterError::InvalidK { k: 0 });
    }
    if x.len() < params.k {
        return Err(ClusterError::TooFewPoints { k: params.k, got: x.len() });
    }
    if params.n_init == 0 {
        return Err(ClusterError::InvalidParams { what: "n_init" });
    }
    if params.max_iter == 0 {
        return Err(ClusterError::InvalidParams { what: "max_iter" });
    }
    let dim = x[0].dim();
    for v in x {
        if v.dim() != dim {
            return Err(ClusterError::DimensionMismatch { expected: dim, got: v.dim() });
        }
    }

    let x_norms2: Vec<f64> = x.iter().map(SparseVector::norm_squared).collect();
    let runs: Vec<(usize, RunOutcome)> = (0..params.n_init)
        .into_par_iter()
        .map(|restart| {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(restart as u64);
            (restart, lloyd_once(x, &x_norms2, params.k, params.max_iter, &mut rng))
        })
        .collect();

    let (restart, best) = runs
        .into_iter()
        .min_by(|(ra, a), (rb, b)| {
            a.inertia
                .partial_cmp(&b.inertia)
                .expect("inertia is finite")
                .then(ra.cmp(rb))
        })
        .expect("n_init >= 1");
    Ok(KMeansModel {
        centroids: best.centroids,
        dim,
        inertia: best.inertia,
        n_iter: best.n_iter,
        restart,
    })
}

/// Nearest-centroid cluster ids for new points (ties -> lowest id).
pub fn kmeans_assign(model: &KMeansModel, x: &[SparseVector]) -> Result<Vec<usize>, ClusterError> {
    for v in x {
        if v.dim() != model.dim {
            return Err(ClusterError::DimensionMismatch { expected: model.dim, got: v.dim() });
        }
    }
    let c_norms2: Vec<f64> = model
        .centroids
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    Ok(x.iter()
        .map(|xi| nearest(xi, xi.norm_squared(), &model.centroids, &c_norms2).0)
        .collect())
}
