//! Config-driven experiment runner: composes preprocessing, feature
//! extraction, a model and evaluation into one reproducible run, plus
//! grid sweeps, report rendering and model persistence for the CLI.

mod config;
mod grid;
mod model_store;
mod pipeline;
mod render;

pub use config::{
    parse_axis_values, resolve_seed, ExperimentConfig, FeatureConfig, FeatureSpec, ModelConfig,
    PathsConfig, Weighting,
};
pub use grid::{run_grid, GridOutcome, GridRun};
pub use model_store::{fit_model, LoadedModel, ModelArtifact, Prediction, SavedModel, SavedPos};
pub use pipeline::{
    run_cross_validation, run_experiment, run_experiment_with_hook, ClusterContingency,
    ClusteringScores, CvReport, FoldScore, HookEvent, NoopHook, PipelineHook, RunOutcome,
    RunReport,
};
pub use render::{render_grid, render_report, ReportFormat};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {msg}")]
    Config { msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {msg}")]
    Json { path: String, msg: String },
    #[error("invalid model file: {msg}")]
    Model { msg: String },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Vectorize(#[from] crate::vectorize::VectorizeError),
    #[error(transparent)]
    Hmm(#[from] crate::postag::HmmError),
    #[error(transparent)]
    Classifier(#[from] crate::classifiers::ClassifierError),
    #[error(transparent)]
    Svm(#[from] crate::svm::SvmError),
    #[error(transparent)]
    Cluster(#[from] crate::cluster::ClusterError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config { msg: msg.into() }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 1,
            HarnessError::Svm(crate::svm::SvmError::NonConvergence { .. }) => 3,
            _ => 2,
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a text file, creating parent directories as needed.
pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
