//! Hyperparameter sweeps: one full experiment per axis value, run
//! concurrently, with a deterministic best-run summary.
//!
//! Axis values are canonicalized (sorted, exact duplicates collapsed)
//! before anything runs, so the outcome is invariant to the order the
//! values were given in. Every run uses the base config's seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{run_experiment, RunReport};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub value: serde_json::Value,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub axis: String,
    pub runs: Vec<GridRun>,
    /// Index into `runs`: highest primary metric (accuracy, or ARI for
    /// clustering), ties by the secondary metric (macro-F1 / V-measure),
    /// then the first in canonical value order.
    pub best: usize,
}

impl GridOutcome {
    pub fn best_run(&self) -> &GridRun {
        &self.runs[self.best]
    }
}

fn canonical_values(values: &[serde_json::Value]) -> Vec<serde_json::Value> {
    let mut vals = values.to_vec();
    if vals.iter().all(serde_json::Value::is_number) {
        vals.sort_by(|a, b| {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            a.partial_cmp(&b).expect("JSON numbers are finite")
        });
    } else {
        vals.sort_by_key(|v| v.to_string());
    }
    vals.dedup();
    vals
}

fn select_best(runs: &[GridRun]) -> usize {
    runs.iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            let (pa, sa) = a.report.outcome.headline_scores();
            let (pb, sb) = b.report.outcome.headline_scores();
            pa.partial_cmp(&pb)
                .expect("scores are finite")
                .then(sa.partial_cmp(&sb).expect("scores are finite"))
                .then(ib.cmp(ia)) // equal scores: keep the earlier run
        })
        .map(|(i, _)| i)
        .expect("grid has at least one run")
}

pub fn run_grid(
    base: &ExperimentConfig,
    axis: &str,
    values: &[serde_json::Value],
    jobs: Option<usize>,
) -> Result<GridOutcome, HarnessError> {
    base.validate()?;
    if values.is_empty() {
        return Err(HarnessError::config(format!("axis '{axis}' has no values")));
    }
    let values = canonical_values(values);
    // materialize (and thereby validate) every config before running any
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| base.with_axis_value(axis, v))
        .collect::<Result<_, _>>()?;

    let run_all = || configs.par_iter().map(run_experiment).collect::<Result<Vec<_>, _>>();
    let reports = match jobs {
        Some(0) => return Err(HarnessError::config("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::config(format!("cannot build a {n}-thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    }?;

    let runs: Vec<GridRun> = values
        .into_iter()
        .zip(reports)
        .map(|(value, report)| GridRun { value, report })
        .collect();
    let best = select_best(&runs);
    Ok(GridOutcome { axis: axis.to_string(), runs, best })
}
