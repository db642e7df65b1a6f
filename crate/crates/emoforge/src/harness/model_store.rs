//! Model persistence: everything a fresh process needs to reproduce
//! predictions — the feature recipe, frozen vocabularies, the materialized
//! stoplist, the trained POS tagger, and the fitted model itself — in one
//! JSON document.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use super::config::{ExperimentConfig, FeatureConfig, ModelConfig};
use super::pipeline::{
    load_configured_corpus, ClusterContingency, ClusteringScores, Featurizer, NoopHook,
    Preprocessor, RunOutcome, RunReport, Tagger,
};
use super::HarnessError;
use crate::classifiers::{knn_fit, nb_fit, tree_fit, KnnModel, NbModel, TreeModel, TreeParams};
use crate::cluster::{kmeans_assign, kmeans_fit, KMeansModel, KMeansParams};
use crate::corpus::{Corpus, EmotionLabel};
use crate::eval::{adjusted_rand_index, classification_report, confusion, v_measure};
use crate::postag::HmmModel;
use crate::svm::{ovo_fit, MulticlassSvmModel, SmoParams};
use crate::text::Stoplist;
use crate::vectorize::{SparseVector, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedPos {
    pub hmm: HmmModel,
    pub keep: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelArtifact {
    Knn(KnnModel),
    Mnb(NbModel),
    Dtree(TreeModel),
    Svm(MulticlassSvmModel),
    Kmeans(KMeansModel),
}

impl ModelArtifact {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelArtifact::Knn(_) => "knn",
            ModelArtifact::Mnb(_) => "mnb",
            ModelArtifact::Dtree(_) => "dtree",
            ModelArtifact::Svm(_) => "svm",
            ModelArtifact::Kmeans(_) => "kmeans",
        }
    }

    pub fn is_clustering(&self) -> bool {
        matches!(self, ModelArtifact::Kmeans(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub version: String,
    /// Label inventory seen at training time (sorted).
    pub labels: Vec<EmotionLabel>,
    pub feature: FeatureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<SavedPos>,
    /// One frozen vocabulary per feature block.
    pub vocabularies: Vec<Vocabulary>,
    pub artifact: ModelArtifact,
}

impl SavedModel {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        super::write_file(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SavedModel, HarnessError> {
        let path = path.as_ref();
        serde_json::from_str(&super::read_file(path)?).map_err(|e| HarnessError::Json {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }
}

/// Trains the configured model on the configured training corpus and
/// bundles every artifact needed for standalone prediction.
pub fn fit_model(config: &ExperimentConfig) -> Result<SavedModel, HarnessError> {
    config.validate()?;
    let seed = config.resolve_seed(None)?;
    let train = load_configured_corpus(config, &config.paths.train, None)?;
    let pre = Preprocessor::from_config(config)?;
    let train_texts: Vec<&str> = train.docs().iter().map(|d| d.text.as_str()).collect();
    let (featurizer, x_train) =
        Featurizer::fit_transform(&pre, config.feature.specs(), &train_texts, &mut NoopHook)?;
    let y_train: Vec<EmotionLabel> = train.docs().iter().map(|d| d.label.clone()).collect();

    let artifact = match config.model {
        ModelConfig::Knn { k } => ModelArtifact::Knn(knn_fit(x_train, y_train, k)?),
        ModelConfig::Mnb { alpha } => ModelArtifact::Mnb(nb_fit(&x_train, &y_train, alpha)?),
        ModelConfig::Dtree { max_depth, min_samples_split, min_samples_leaf } => {
            let params = TreeParams { max_depth, min_samples_split, min_samples_leaf };
            ModelArtifact::Dtree(tree_fit(&x_train, &y_train, params)?)
        }
        ModelConfig::Svm { c, kernel } => {
            let params = SmoParams { c, seed, ..SmoParams::default() };
            ModelArtifact::Svm(ovo_fit(&x_train, &y_train, None, kernel, &params)?)
        }
        ModelConfig::Kmeans { k_clusters, n_init, max_iter } => {
            let params = KMeansParams { k: k_clusters, n_init, max_iter, seed };
            ModelArtifact::Kmeans(kmeans_fit(&x_train, &params)?)
        }
    };

    Ok(SavedModel {
        version: env!("CARGO_PKG_VERSION").to_string(),
        labels: train.labels().to_vec(),
        feature: config.feature.clone(),
        stopwords: pre.stoplist.as_ref().map(Stoplist::sorted_words),
        pos: pre.tagger.as_ref().map(|t| SavedPos {
            hmm: t.hmm.clone(),
            keep: t.keep.iter().cloned().collect(),
        }),
        vocabularies: featurizer.vocabs,
        artifact,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    Label(EmotionLabel),
    Cluster(usize),
}

impl std::fmt::Display for Prediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Prediction::Label(l) => f.write_str(l.as_str()),
            Prediction::Cluster(c) => write!(f, "{c}"),
        }
    }
}

/// A saved model rehydrated for prediction: the stoplist and tagger are
/// rebuilt from the stored artifacts, never from the original files.
#[derive(Debug)]
pub struct LoadedModel {
    saved: SavedModel,
    pre: Preprocessor,
}

impl LoadedModel {
    pub fn from_saved(saved: SavedModel) -> Result<LoadedModel, HarnessError> {
        let n_specs = saved.feature.specs().len();
        if saved.vocabularies.len() != n_specs {
            return Err(HarnessError::Model {
                msg: format!(
                    "{} vocabularies for {} feature blocks",
                    saved.vocabularies.len(),
                    n_specs
                ),
            });
        }
        let stoplist = if saved.feature.uses_stopwords() {
            let words = saved.stopwords.as_ref().ok_or_else(|| HarnessError::Model {
                msg: "feature uses stopwords but none are stored".to_string(),
            })?;
            Some(Stoplist::from_words(words.iter().map(String::as_str)))
        } else {
            None
        };
        let tagger = if saved.feature.uses_pos_filter() {
            let pos = saved.pos.clone().ok_or_else(|| HarnessError::Model {
                msg: "feature uses the POS filter but no tagger is stored".to_string(),
            })?;
            Some(Tagger { hmm: pos.hmm, keep: pos.keep.into_iter().collect() })
        } else {
            None
        };
        Ok(LoadedModel { saved, pre: Preprocessor { stoplist, tagger } })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LoadedModel, HarnessError> {
        LoadedModel::from_saved(SavedModel::load(path)?)
    }

    pub fn saved(&self) -> &SavedModel {
        &self.saved
    }

    pub fn labels(&self) -> &[EmotionLabel] {
        &self.saved.labels
    }

    fn featurizer(&self) -> Featurizer<'_> {
        Featurizer { specs: self.saved.feature.specs(), vocabs: self.saved.vocabularies.clone() }
    }

    pub fn transform(&self, text: &str) -> Result<SparseVector, HarnessError> {
        self.featurizer().transform(&self.pre, text)
    }

    pub fn predict_texts(&self, texts: &[&str]) -> Result<Vec<Prediction>, HarnessError> {
        let featurizer = self.featurizer();
        let xs: Vec<SparseVector> = texts
            .iter()
            .map(|t| featurizer.transform(&self.pre, t))
            .collect::<Result<_, _>>()?;
        Ok(match &self.saved.artifact {
            ModelArtifact::Knn(m) => {
                m.predict_batch(&xs)?.into_iter().map(Prediction::Label).collect()
            }
            ModelArtifact::Mnb(m) => {
                m.predict_batch(&xs)?.into_iter().map(Prediction::Label).collect()
            }
            ModelArtifact::Dtree(m) => {
                m.predict_batch(&xs)?.into_iter().map(Prediction::Label).collect()
            }
            ModelArtifact::Svm(m) => {
                m.predict_batch(&xs)?.into_iter().map(Prediction::Label).collect()
            }
            ModelArtifact::Kmeans(m) => {
                kmeans_assign(m, &xs)?.into_iter().map(Prediction::Cluster).collect()
            }
        })
    }

    /// Scores the model on a labeled corpus: a classification report for
    /// classifiers, ARI/V-measure of the induced partition for k-means
    /// (the stored inertia/iteration metadata refer to training).
    pub fn evaluate(&self, test: &Corpus) -> Result<RunReport, HarnessError> {
        let started = Instant::now();
        let texts: Vec<&str> = test.docs().iter().map(|d| d.text.as_str()).collect();
        let gold: Vec<EmotionLabel> = test.docs().iter().map(|d| d.label.clone()).collect();
        let outcome = if let ModelArtifact::Kmeans(m) = &self.saved.artifact {
            let featurizer = self.featurizer();
            let xs: Vec<SparseVector> = texts
                .iter()
                .map(|t| featurizer.transform(&self.pre, t))
                .collect::<Result<_, _>>()?;
            let assign = kmeans_assign(m, &xs)?;
            let gold_refs: Vec<&EmotionLabel> = gold.iter().collect();
            let vm = v_measure(&gold_refs, &assign)?;
            let scores = ClusteringScores {
                ari: adjusted_rand_index(&gold_refs, &assign)?,
                homogeneity: vm.homogeneity,
                completeness: vm.completeness,
                v_measure: vm.v,
                inertia: m.inertia(),
                n_iter: m.n_iter(),
                restart: m.restart(),
            };
            let contingency =
                ClusterContingency::build(&self.saved.labels, &gold_refs, &assign, m.k());
            RunOutcome::Clustering { scores, contingency }
        } else {
            let preds: Vec<EmotionLabel> = self
                .predict_texts(&texts)?
                .into_iter()
                .map(|p| match p {
                    Prediction::Label(l) => l,
                    Prediction::Cluster(_) => unreachable!("classifier artifacts emit labels"),
                })
                .collect();
            let cm = confusion(&gold, &preds, &self.saved.labels)?;
            let report = classification_report(&cm);
            RunOutcome::Classification { report, confusion: cm }
        };
        Ok(RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            config: None,
            n_train: None,
            n_eval: test.len(),
            outcome,
            duration: Some(started.elapsed()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_experiment;

    const TRAIN: &str = concat!(
        "{\"id\": \"t1\", \"text\": \"joy joy bright smile\", \"label\": \"happy\"}\n",
        "{\"id\": \"t2\", \"text\": \"smile bright joy\", \"label\": \"happy\"}\n",
        "{\"id\": \"t3\", \"text\": \"joy smile warm\", \"label\": \"happy\"}\n",
        "{\"id\": \"t4\", \"text\": \"tears tears gloom\", \"label\": \"sad\"}\n",
        "{\"id\": \"t5\", \"text\": \"gloom tears dark\", \"label\": \"sad\"}\n",
        "{\"id\": \"t6\", \"text\": \"dark gloom tears\", \"label\": \"sad\"}\n",
    );
    const TEST: &str = concat!(
        "{\"id\": \"e1\", \"text\": \"joy bright\", \"label\": \"happy\"}\n",
        "{\"id\": \"e2\", \"text\": \"tears dark\", \"label\": \"sad\"}\n",
    );

    fn fixture(model_json: &str, feature_json: &str) -> (tempfile::TempDir, ExperimentConfig) {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train.jsonl"), TRAIN).unwrap();
        std::fs::write(dir.path().join("test.jsonl"), TEST).unwrap();
        let json = format!(
            r#"{{
              "model": {model_json},
              "feature": {feature_json},
              "paths": {{"train": "train.jsonl", "test": "test.jsonl"}},
              "seed": 5
            }}"#
        );
        let mut cfg: ExperimentConfig = serde_json::from_str(&json).unwrap();
        cfg.base_dir = Some(dir.path().to_path_buf());
        (dir, cfg)
    }

    #[test]
    fn saved_model_reproduces_pipeline_predictions_in_a_fresh_process() {
        let (dir, cfg) = fixture(r#"{"kind": "mnb"}"#, r#"{"weighting": "tfidf"}"#);
        let saved = fit_model(&cfg).unwrap();
        let path = dir.path().join("model.json");
        saved.save(&path).unwrap();

        let loaded = LoadedModel::load(&path).unwrap();
        assert_eq!(loaded.saved(), &saved, "round trip is lossless");

        let test = load_configured_corpus(&cfg, cfg.paths.test.as_ref().unwrap(), None).unwrap();
        let eval = loaded.evaluate(&test).unwrap();
        let direct = run_experiment(&cfg).unwrap();
        match (&eval.outcome, &direct.outcome) {
            (
                RunOutcome::Classification { report: a, confusion: ca },
                RunOutcome::Classification { report: b, confusion: cb },
            ) => {
                assert_eq!(a, b);
                assert_eq!(ca, cb);
            }
            other => panic!("expected two classification outcomes, got {other:?}"),
        }
    }

    #[test]
    fn kmeans_model_assigns_clusters_after_reload() {
        let (dir, cfg) = fixture(
            r#"{"kind": "kmeans", "k_clusters": 2, "n_init": 5}"#,
            r#"{"weighting": "tfidf"}"#,
        );
        let saved = fit_model(&cfg).unwrap();
        let path = dir.path().join("model.json");
        saved.save(&path).unwrap();
        let loaded = LoadedModel::load(&path).unwrap();
        let preds = loaded.predict_texts(&["joy bright", "tears dark"]).unwrap();
        match (&preds[0], &preds[1]) {
            (Prediction::Cluster(a), Prediction::Cluster(b)) => assert_ne!(a, b),
            other => panic!("expected cluster predictions, got {other:?}"),
        }
    }

    #[test]
    fn stopword_and_pos_artifacts_are_self_contained() {
        let (dir, mut cfg) = fixture(
            r#"{"kind": "knn", "k": 1}"#,
            r#"{"weighting": "count", "use_stopwords": true, "use_pos_filter": true}"#,
        );
        let mut tagged = String::new();
        for _ in 0..4 {
            tagged.push_str("joy\tNP\nbright\tJJ\nsmile\tVM\n\n");
            tagged.push_str("tears\tNP\ngloom\tJJ\ndark\tJJ\nwarm\tJJ\n\n");
        }
        std::fs::write(dir.path().join("tagged.txt"), tagged).unwrap();
        std::fs::write(dir.path().join("stop.txt"), "the\nand\n# comment\n").unwrap();
        cfg.paths.pos_corpus = Some("tagged.txt".into());
        cfg.paths.stopwords = Some("stop.txt".into());

        let saved = fit_model(&cfg).unwrap();
        assert_eq!(saved.stopwords.as_deref(), Some(&["and".to_string(), "the".to_string()][..]));
        assert!(saved.pos.is_some());
        let path = dir.path().join("model.json");
        saved.save(&path).unwrap();

        // delete the source files: the loaded model must not need them
        std::fs::remove_file(dir.path().join("tagged.txt")).unwrap();
        std::fs::remove_file(dir.path().join("stop.txt")).unwrap();
        let loaded = LoadedModel::load(&path).unwrap();
        let preds = loaded.predict_texts(&["the joy and bright", "tears dark"]).unwrap();
        assert_eq!(
            preds,
            vec![
                Prediction::Label(EmotionLabel::new("happy").unwrap()),
                Prediction::Label(EmotionLabel::new("sad").unwrap()),
            ]
        );
    }

    #[test]
    fn inconsistent_model_files_are_rejected() {
        let (_dir, cfg) = fixture(r#"{"kind": "mnb"}"#, r#"{"weighting": "count"}"#);
        let mut saved = fit_model(&cfg).unwrap();
        saved.vocabularies.clear();
        let err = LoadedModel::from_saved(saved).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let mut saved = fit_model(&cfg).unwrap();
        saved.feature = FeatureConfig::Single(crate::harness::FeatureSpec {
            ngram_lo: 1,
            ngram_hi: 1,
            weighting: crate::harness::Weighting::Count,
            use_stopwords: true,
            use_pos_filter: false,
        });
        let err = LoadedModel::from_saved(saved).unwrap_err();
        assert!(matches!(err, HarnessError::Model { .. }), "{err}");
    }
}
