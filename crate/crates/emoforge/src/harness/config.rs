//! Experiment configuration: a JSON file selecting a model, a feature
//! recipe and the corpus paths. The full schema is documented in the
//! project README; every run embeds the parsed config in its report.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::svm::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Tfidf,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Count => "count",
            Weighting::Tfidf => "tfidf",
        })
    }
}

/// One n-gram feature block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    #[serde(default = "default_ngram")]
    pub ngram_lo: usize,
    #[serde(default = "default_ngram")]
    pub ngram_hi: usize,
    pub weighting: Weighting,
    #[serde(default)]
    pub use_stopwords: bool,
    #[serde(default)]
    pub use_pos_filter: bool,
}

fn default_ngram() -> usize {
    1
}

impl FeatureSpec {
    pub fn describe(&self) -> String {
        let mut s = format!("ngram({},{}) {}", self.ngram_lo, self.ngram_hi, self.weighting);
        if self.use_stopwords {
            s.push_str(" +stopwords");
        }
        if self.use_pos_filter {
            s.push_str(" +pos");
        }
        s
    }
}

/// Either a single feature block or a concatenation of several
/// (`{"union": [block, block, ...]}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureConfig {
    Union { union: Vec<FeatureSpec> },
    Single(FeatureSpec),
}

impl FeatureConfig {
    pub fn specs(&self) -> &[FeatureSpec] {
        match self {
            FeatureConfig::Union { union } => union,
            FeatureConfig::Single(spec) => std::slice::from_ref(spec),
        }
    }

    pub fn uses_stopwords(&self) -> bool {
        self.specs().iter().any(|s| s.use_stopwords)
    }

    pub fn uses_pos_filter(&self) -> bool {
        self.specs().iter().any(|s| s.use_pos_filter)
    }

    pub fn describe(&self) -> String {
        self.specs()
            .iter()
            .map(FeatureSpec::describe)
            .collect::<Vec<_>>()
            .join(" | ")
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.specs().is_empty() {
            return Err(HarnessError::config("feature union must not be empty"));
        }
        for spec in self.specs() {
            if spec.ngram_lo == 0 || spec.ngram_lo > spec.ngram_hi {
                return Err(HarnessError::config(format!(
                    "invalid n-gram range [{}, {}]: need 1 <= lo <= hi",
                    spec.ngram_lo, spec.ngram_hi
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Knn {
        k: usize,
    },
    Mnb {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Dtree {
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_mss")]
        min_samples_split: usize,
        #[serde(default = "default_msl")]
        min_samples_leaf: usize,
    },
    Svm {
        c: f64,
        kernel: Kernel,
    },
    Kmeans {
        k_clusters: usize,
        #[serde(default = "default_n_init")]
        n_init: usize,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
}

fn default_alpha() -> f64 {
    1.0
}

fn default_mss() -> usize {
    2
}

fn default_msl() -> usize {
    1
}

fn default_n_init() -> usize {
    10
}

fn default_max_iter() -> usize {
    300
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Knn { .. } => "knn",
            ModelConfig::Mnb { .. } => "mnb",
            ModelConfig::Dtree { .. } => "dtree",
            ModelConfig::Svm { .. } => "svm",
            ModelConfig::Kmeans { .. } => "kmeans",
        }
    }

    pub fn is_clustering(&self) -> bool {
        matches!(self, ModelConfig::Kmeans { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            ModelConfig::Knn { k } => format!("knn (k={k})"),
            ModelConfig::Mnb { alpha } => format!("mnb (alpha={alpha})"),
            ModelConfig::Dtree { max_depth, min_samples_split, min_samples_leaf } => {
                let depth = match max_depth {
                    Some(d) => d.to_string(),
                    None => "none".to_string(),
                };
                format!(
                    "dtree (max_depth={depth}, min_split={min_samples_split}, min_leaf={min_samples_leaf})"
                )
            }
            ModelConfig::Svm { c, kernel } => match kernel {
                Kernel::Linear => format!("svm (C={c}, linear)"),
                Kernel::Rbf { gamma } => format!("svm (C={c}, rbf gamma={gamma})"),
            },
            ModelConfig::Kmeans { k_clusters, n_init, max_iter } => {
                format!("kmeans (k={k_clusters}, n_init={n_init}, max_iter={max_iter})")
            }
        }
    }

    /// Hyperparameter names `run_grid` may sweep for this model kind.
    pub fn valid_axes(&self) -> &'static [&'static str] {
        match self {
            ModelConfig::Knn { .. } => &["k"],
            ModelConfig::Mnb { .. } => &["alpha"],
            ModelConfig::Dtree { .. } => {
                &["max_depth", "min_samples_split", "min_samples_leaf"]
            }
            ModelConfig::Svm { .. } => &["c", "gamma"],
            ModelConfig::Kmeans { .. } => &["k_clusters", "n_init", "max_iter"],
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config { msg });
        match *self {
            ModelConfig::Knn { k } if k == 0 => bad("knn requires k >= 1".into()),
            ModelConfig::Mnb { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                bad(format!("mnb requires a positive finite alpha, got {alpha}"))
            }
            ModelConfig::Dtree { min_samples_split, .. } if min_samples_split < 2 => {
                bad("dtree requires min_samples_split >= 2".into())
            }
            ModelConfig::Dtree { min_samples_leaf, .. } if min_samples_leaf == 0 => {
                bad("dtree requires min_samples_leaf >= 1".into())
            }
            ModelConfig::Svm { c, kernel } => {
                if !(c.is_finite() && c > 0.0) {
                    return bad(format!("svm requires a positive finite C, got {c}"));
                }
                kernel.validate().map_err(HarnessError::Svm)
            }
            ModelConfig::Kmeans { k_clusters, n_init, max_iter } => {
                if k_clusters == 0 {
                    return bad("kmeans requires k_clusters >= 1".into());
                }
                if n_init == 0 || max_iter == 0 {
                    return bad("kmeans requires n_init >= 1 and max_iter >= 1".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_corpus: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub feature: FeatureConfig,
    pub paths: PathsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Directory relative paths resolve against (the config file's parent
    /// when loaded from disk); in-memory configs resolve against the
    /// working directory.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
        let path = path.as_ref();
        let text = super::read_file(path)?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| HarnessError::Json {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model.validate()?;
        self.feature.validate()?;
        if self.feature.uses_pos_filter() && self.paths.pos_corpus.is_none() {
            return Err(HarnessError::config(
                "feature uses the POS filter but paths.pos_corpus is not set",
            ));
        }
        Ok(())
    }

    /// Resolves a config-supplied path against the config's base directory.
    pub fn resolved(&self, path: &Path) -> PathBuf {
        match (&self.base_dir, path.is_relative()) {
            (Some(base), true) => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Effective seed: explicit flag, then the config file, then the
    /// `EMOFORGE_SEED` environment variable, then 42.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, HarnessError> {
        resolve_seed(flag.or(self.seed))
    }

    /// Returns a copy with the named hyperparameter replaced, for grid
    /// sweeps. The axis must be valid for the config's model kind.
    pub fn with_axis_value(
        &self,
        axis: &str,
        value: &serde_json::Value,
    ) -> Result<ExperimentConfig, HarnessError> {
        let invalid = |what: &str| {
            HarnessError::config(format!(
                "axis value {value} is not a valid {what} for axis '{axis}'"
            ))
        };
        let as_usize = || value.as_u64().map(|v| v as usize).ok_or_else(|| invalid("integer"));
        let as_f64 = || value.as_f64().ok_or_else(|| invalid("number"));
        let mut patched = self.clone();
        match (&mut patched.model, axis) {
            (ModelConfig::Knn { k }, "k") => *k = as_usize()?,
            (ModelConfig::Mnb { alpha }, "alpha") => *alpha = as_f64()?,
            (ModelConfig::Dtree { max_depth, .. }, "max_depth") => {
                *max_depth = if value.is_null() { None } else { Some(as_usize()?) };
            }
            (ModelConfig::Dtree { min_samples_split, .. }, "min_samples_split") => {
                *min_samples_split = as_usize()?;
            }
            (ModelConfig::Dtree { min_samples_leaf, .. }, "min_samples_leaf") => {
                *min_samples_leaf = as_usize()?;
            }
            (ModelConfig::Svm { c, .. }, "c") => *c = as_f64()?,
            (ModelConfig::Svm { kernel, .. }, "gamma") => match kernel {
                Kernel::Rbf { gamma } => *gamma = as_f64()?,
                Kernel::Linear => {
                    return Err(HarnessError::config(
                        "axis 'gamma' requires an rbf kernel, config uses linear",
                    ));
                }
            },
            (ModelConfig::Kmeans { k_clusters, .. }, "k_clusters") => *k_clusters = as_usize()?,
            (ModelConfig::Kmeans { n_init, .. }, "n_init") => *n_init = as_usize()?,
            (ModelConfig::Kmeans { max_iter, .. }, "max_iter") => *max_iter = as_usize()?,
            (model, _) => {
                return Err(HarnessError::config(format!(
                    "'{axis}' is not a hyperparameter of model '{}'; valid axes: {}",
                    model.kind(),
                    model.valid_axes().join(", ")
                )));
            }
        }
        patched.validate()?;
        Ok(patched)
    }
}

/// Seed precedence for commands that don't read a config: explicit flag,
/// then the `EMOFORGE_SEED` environment variable, then 42.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, HarnessError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("EMOFORGE_SEED") {
        Ok(raw) => raw.trim().parse().map_err(|_| {
            HarnessError::config(format!("EMOFORGE_SEED is not a valid u64: {raw:?}"))
        }),
        Err(_) => Ok(42),
    }
}

/// Parses `name=v1,v2,...` into an axis name and JSON values. Values that
/// parse as JSON scalars (numbers, null) are taken as such; anything else
/// is kept as a string.
pub fn parse_axis_values(spec: &str) -> Result<(String, Vec<serde_json::Value>), HarnessError> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::config(format!("axis must look like name=v1,v2,...: {spec:?}")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(HarnessError::config("axis name must not be empty"));
    }
    let values: Vec<serde_json::Value> = rest
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()))
        })
        .collect();
    if values.is_empty() {
        return Err(HarnessError::config(format!("axis '{name}' has no values")));
    }
    Ok((name.to_string(), values))
}
