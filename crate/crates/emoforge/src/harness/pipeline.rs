//! The experiment pipeline. Stage order is fixed:
//!
//! ```text
//! tokenize -> [pos filter] -> [stopword removal] -> n-grams
//!          -> fit vocabulary on TRAIN ONLY -> transform train/test
//!          -> fit model -> predict -> metrics
//! ```
//!
//! Clustering configs fit k-means on the training vectors and score the
//! found partition against the training gold labels (ARI, V-measure).
//! Everything downstream of the config is deterministic per seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use super::config::{ExperimentConfig, FeatureSpec, ModelConfig, Weighting};
use super::HarnessError;
use crate::classifiers::{knn_fit, nb_fit, tree_fit, TreeParams};
use crate::cluster::{kmeans_assign, kmeans_fit, KMeansParams};
use crate::corpus::{
    load_corpus, load_corpus_with_inventory, load_tagged_corpus, Corpus, CorpusFormat,
    EmotionLabel,
};
use crate::eval::{
    adjusted_rand_index, classification_report, confusion, v_measure, ClassificationReport,
    ConfusionMatrix,
};
use crate::postag::{default_keep_tags, pos_filter, train_hmm, viterbi, HmmModel};
use crate::svm::{ovo_fit, SmoParams};
use crate::text::{
    default_bangla_stoplist, ngrams, remove_stopwords, tokenize, NGram, Stoplist,
};
use crate::vectorize::{
    feature_union, fit_vocabulary, transform_count, transform_tfidf, SparseVector, Vocabulary,
};

/// Smoothing used when training the POS tagger inside the pipeline.
pub(crate) const POS_ALPHA: f64 = 0.1;

/// Pipeline instrumentation events, in emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookEvent {
    /// A feature block's vocabulary was fitted (on training data only).
    VocabularyFitted { block: usize, n_terms: usize },
    /// All training documents were vectorized.
    TrainVectorized { n_docs: usize },
    /// One test document was transformed with the frozen vocabularies.
    TestDocumentTransformed { index: usize },
}

pub trait PipelineHook {
    fn on_event(&mut self, event: &HookEvent);
}

pub struct NoopHook;

impl PipelineHook for NoopHook {
    fn on_event(&mut self, _event: &HookEvent) {}
}

/// Text-side preprocessing shared by training, prediction and the model
/// store: the stoplist and the POS tagger are built once per run.
#[derive(Debug)]
pub(crate) struct Preprocessor {
    pub(crate) stoplist: Option<Stoplist>,
    pub(crate) tagger: Option<Tagger>,
}

#[derive(Debug)]
pub(crate) struct Tagger {
    pub(crate) hmm: HmmModel,
    pub(crate) keep: std::collections::BTreeSet<String>,
}

impl Preprocessor {
    pub(crate) fn from_config(config: &ExperimentConfig) -> Result<Preprocessor, HarnessError> {
        let stoplist = if config.feature.uses_stopwords() {
            Some(match &config.paths.stopwords {
                Some(p) => {
                    let path = config.resolved(p);
                    Stoplist::load(&path).map_err(|source| HarnessError::Io {
                        path: path.display().to_string(),
                        source,
                    })?
                }
                None => default_bangla_stoplist(),
            })
        } else {
            None
        };
        let tagger = if config.feature.uses_pos_filter() {
            let p = config
                .paths
                .pos_corpus
                .as_ref()
                .expect("validated: pos filter requires pos_corpus");
            let sentences = load_tagged_corpus(config.resolved(p))?;
            let hmm = train_hmm(&sentences, POS_ALPHA)?;
            Some(Tagger { hmm, keep: default_keep_tags() })
        } else {
            None
        };
        Ok(Preprocessor { stoplist, tagger })
    }

    /// Runs the token-level stages for one document under one feature
    /// block: tokenize, optional POS filter, optional stopword removal,
    /// n-gram expansion.
    pub(crate) fn terms(&self, text: &str, spec: &FeatureSpec) -> Result<Vec<NGram>, HarnessError> {
        let mut tokens = tokenize(text);
        if spec.use_pos_filter && !tokens.is_empty() {
            let tagger = self.tagger.as_ref().expect("pos filter requires a tagger");
            let tags = viterbi(&tagger.hmm, &tokens)?;
            tokens = pos_filter(&tokens, &tags, &tagger.keep)?;
        }
        if spec.use_stopwords {
            let stoplist = self.stoplist.as_ref().expect("stopword removal requires a stoplist");
            tokens = remove_stopwords(&tokens, stoplist);
        }
        ngrams(&tokens, spec.ngram_lo, spec.ngram_hi)
            .map_err(|e| HarnessError::config(e.to_string()))
    }
}

/// Frozen per-block vocabularies; transforms any document into the
/// concatenated feature space.
pub(crate) struct Featurizer<'a> {
    pub(crate) specs: &'a [FeatureSpec],
    pub(crate) vocabs: Vec<Vocabulary>,
}

fn transform_block(doc: &[NGram], vocab: &Vocabulary, weighting: Weighting) -> SparseVector {
    match weighting {
        Weighting::Count => transform_count(doc, vocab),
        Weighting::Tfidf => transform_tfidf(doc, vocab),
    }
}

impl<'a> Featurizer<'a> {
    /// Fits one vocabulary per block on the training texts and returns the
    /// vectorized training set alongside.
    pub(crate) fn fit_transform(
        pre: &Preprocessor,
        specs: &'a [FeatureSpec],
        train_texts: &[&str],
        hook: &mut dyn PipelineHook,
    ) -> Result<(Featurizer<'a>, Vec<SparseVector>), HarnessError> {
        let mut vocabs = Vec::with_capacity(specs.len());
        let mut blocks: Vec<Vec<SparseVector>> = Vec::with_capacity(specs.len());
        for (block, spec) in specs.iter().enumerate() {
            let docs: Vec<Vec<NGram>> = train_texts
                .iter()
                .map(|t| pre.terms(t, spec))
                .collect::<Result<_, _>>()?;
            let vocab = fit_vocabulary(&docs)?;
            hook.on_event(&HookEvent::VocabularyFitted { block, n_terms: vocab.len() });
            blocks.push(
                docs.iter()
                    .map(|d| transform_block(d, &vocab, spec.weighting))
                    .collect(),
            );
            vocabs.push(vocab);
        }
        let featurizer = Featurizer { specs, vocabs };
        let mut x_train = Vec::with_capacity(train_texts.len());
        for i in 0..train_texts.len() {
            let parts: Vec<SparseVector> = blocks.iter().map(|b| b[i].clone()).collect();
            x_train.push(feature_union(&parts)?);
        }
        hook.on_event(&HookEvent::TrainVectorized { n_docs: x_train.len() });
        Ok((featurizer, x_train))
    }

    pub(crate) fn transform(
        &self,
        pre: &Preprocessor,
        text: &str,
    ) -> Result<SparseVector, HarnessError> {
        let parts: Vec<SparseVector> = self
            .specs
            .iter()
            .zip(&self.vocabs)
            .map(|(spec, vocab)| Ok(transform_block(&pre.terms(text, spec)?, vocab, spec.weighting)))
            .collect::<Result<_, HarnessError>>()?;
        Ok(feature_union(&parts)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScores {
    pub ari: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub inertia: f64,
    pub n_iter: usize,
    pub restart: usize,
}

/// Cluster-by-class contingency table; `counts[cluster][class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterContingency {
    pub labels: Vec<EmotionLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ClusterContingency {
    pub(crate) fn build(
        labels: &[EmotionLabel],
        gold: &[&EmotionLabel],
        assign: &[usize],
        k: usize,
    ) -> Self {
        let index: BTreeMap<&EmotionLabel, usize> =
            labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let mut counts = vec![vec![0u64; labels.len()]; k];
        for (&label, &cluster) in gold.iter().zip(assign) {
            counts[cluster][index[label]] += 1;
        }
        ClusterContingency { labels: labels.to_vec(), counts }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum RunOutcome {
    Classification {
        report: ClassificationReport,
        confusion: ConfusionMatrix,
    },
    Clustering {
        scores: ClusteringScores,
        contingency: ClusterContingency,
    },
}

impl RunOutcome {
    /// (primary, secondary) comparison key: (accuracy, macro-F1) for
    /// classification, (ARI, V-measure) for clustering.
    pub fn headline_scores(&self) -> (f64, f64) {
        match self {
            RunOutcome::Classification { report, .. } => (report.accuracy, report.macro_avg.f1),
            RunOutcome::Clustering { scores, .. } => (scores.ari, scores.v_measure),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    /// Documents the metrics were computed on (the test set, or the
    /// training set for clustering runs).
    pub n_eval: usize,
    pub outcome: RunOutcome,
    /// Wall-clock time; excluded from serialization so identical runs
    /// produce byte-identical reports.
    #[serde(skip)]
    pub duration: Option<Duration>,
}

pub(crate) fn load_configured_corpus(
    config: &ExperimentConfig,
    path: &Path,
    inventory: Option<Vec<EmotionLabel>>,
) -> Result<Corpus, HarnessError> {
    let resolved = config.resolved(path);
    let format = CorpusFormat::from_path(&resolved).ok_or_else(|| {
        HarnessError::config(format!(
            "cannot infer corpus format from {:?}: expected a .jsonl/.json or .tsv extension",
            resolved
        ))
    })?;
    Ok(match inventory {
        Some(inv) => load_corpus_with_inventory(&resolved, format, inv)?,
        None => load_corpus(&resolved, format)?,
    })
}

fn fit_predict(
    model: &ModelConfig,
    seed: u64,
    x_train: Vec<SparseVector>,
    y_train: &[EmotionLabel],
    x_test: &[SparseVector],
) -> Result<Vec<EmotionLabel>, HarnessError> {
    Ok(match *model {
        ModelConfig::Knn { k } => {
            knn_fit(x_train, y_train.to_vec(), k)?.predict_batch(x_test)?
        }
        ModelConfig::Mnb { alpha } => nb_fit(&x_train, y_train, alpha)?.predict_batch(x_test)?,
        ModelConfig::Dtree { max_depth, min_samples_split, min_samples_leaf } => {
            let params = TreeParams { max_depth, min_samples_split, min_samples_leaf };
            tree_fit(&x_train, y_train, params)?.predict_batch(x_test)?
        }
        ModelConfig::Svm { c, kernel } => {
            let params = SmoParams { c, seed, ..SmoParams::default() };
            ovo_fit(&x_train, y_train, None, kernel, &params)?.predict_batch(x_test)?
        }
        ModelConfig::Kmeans { .. } => {
            return Err(HarnessError::config(
                "kmeans is a clustering model; use a cluster run",
            ));
        }
    })
}

/// Train/test classification under one config; shared by full runs and
/// cross-validation folds.
fn classify(
    config: &ExperimentConfig,
    seed: u64,
    train: &Corpus,
    test: &Corpus,
    hook: &mut dyn PipelineHook,
) -> Result<(ClassificationReport, ConfusionMatrix), HarnessError> {
    let pre = Preprocessor::from_config(config)?;
    let train_texts: Vec<&str> = train.docs().iter().map(|d| d.text.as_str()).collect();
    let (featurizer, x_train) =
        Featurizer::fit_transform(&pre, config.feature.specs(), &train_texts, hook)?;
    let mut x_test = Vec::with_capacity(test.len());
    for (index, doc) in test.docs().iter().enumerate() {
        x_test.push(featurizer.transform(&pre, &doc.text)?);
        hook.on_event(&HookEvent::TestDocumentTransformed { index });
    }
    let y_train: Vec<EmotionLabel> = train.docs().iter().map(|d| d.label.clone()).collect();
    let y_test: Vec<EmotionLabel> = test.docs().iter().map(|d| d.label.clone()).collect();
    let preds = fit_predict(&config.model, seed, x_train, &y_train, &x_test)?;
    let cm = confusion(&y_test, &preds, train.labels())?;
    let report = classification_report(&cm);
    Ok((report, cm))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    run_experiment_with_hook(config, &mut NoopHook)
}

pub fn run_experiment_with_hook(
    config: &ExperimentConfig,
    hook: &mut dyn PipelineHook,
) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    config.validate()?;
    let seed = config.resolve_seed(None)?;
    let train = load_configured_corpus(config, &config.paths.train, None)?;

    let (outcome, n_eval) = if let ModelConfig::Kmeans { k_clusters, n_init, max_iter } =
        config.model
    {
        let pre = Preprocessor::from_config(config)?;
        let train_texts: Vec<&str> = train.docs().iter().map(|d| d.text.as_str()).collect();
        let (_featurizer, x) =
            Featurizer::fit_transform(&pre, config.feature.specs(), &train_texts, hook)?;
        let model = kmeans_fit(&x, &KMeansParams { k: k_clusters, n_init, max_iter, seed })?;
        let assign = kmeans_assign(&model, &x)?;
        let gold: Vec<&EmotionLabel> = train.docs().iter().map(|d| &d.label).collect();
        let ari = adjusted_rand_index(&gold, &assign)?;
        let vm = v_measure(&gold, &assign)?;
        let contingency = ClusterContingency::build(train.labels(), &gold, &assign, k_clusters);
        let scores = ClusteringScores {
            ari,
            homogeneity: vm.homogeneity,
            completeness: vm.completeness,
            v_measure: vm.v,
            inertia: model.inertia(),
            n_iter: model.n_iter(),
            restart: model.restart(),
        };
        (RunOutcome::Clustering { scores, contingency }, train.len())
    } else {
        let test_path = config.paths.test.as_ref().ok_or_else(|| {
            HarnessError::config("classification runs require paths.test")
        })?;
        let test = load_configured_corpus(config, test_path, Some(train.labels().to_vec()))?;
        let (report, cm) = classify(config, seed, &train, &test, hook)?;
        let n = test.len();
        (RunOutcome::Classification { report, confusion: cm }, n)
    };

    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: Some(seed),
        config: Some(config.clone()),
        n_train: Some(train.len()),
        n_eval,
        outcome,
        duration: Some(started.elapsed()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    pub mean_accuracy: f64,
    pub mean_macro_f1: f64,
}

/// Stratified k-fold cross-validation over the training corpus
/// (`paths.test` is ignored). Documents of each class are shuffled once
/// with the run seed and dealt round-robin into folds.
pub fn run_cross_validation(
    config: &ExperimentConfig,
    folds: usize,
) -> Result<CvReport, HarnessError> {
    config.validate()?;
    if config.model.is_clustering() {
        return Err(HarnessError::config(
            "cross-validation applies to classification models, not kmeans",
        ));
    }
    if folds < 2 {
        return Err(HarnessError::config("cross-validation needs at least 2 folds"));
    }
    let seed = config.resolve_seed(None)?;
    let corpus = load_configured_corpus(config, &config.paths.train, None)?;

    let mut by_label: BTreeMap<&EmotionLabel, Vec<usize>> = BTreeMap::new();
    for (i, d) in corpus.docs().iter().enumerate() {
        by_label.entry(&d.label).or_default().push(i);
    }
    let mut fold_of = vec![0usize; corpus.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idxs in by_label.into_values() {
        let mut idxs = idxs;
        idxs.shuffle(&mut rng);
        for (j, i) in idxs.into_iter().enumerate() {
            fold_of[i] = j % folds;
        }
    }

    let inventory = corpus.labels().to_vec();
    let mut scores = Vec::with_capacity(folds);
    for fold in 0..folds {
        let (mut train_docs, mut test_docs) = (Vec::new(), Vec::new());
        for (i, d) in corpus.docs().iter().enumerate() {
            if fold_of[i] == fold {
                test_docs.push(d.clone());
            } else {
                train_docs.push(d.clone());
            }
        }
        if test_docs.is_empty() || train_docs.is_empty() {
            return Err(HarnessError::config(format!(
                "fold {fold} of {folds} is empty; use fewer folds for {} documents",
                corpus.len()
            )));
        }
        let (n_train, n_test) = (train_docs.len(), test_docs.len());
        let train = Corpus::new(train_docs, Some(inventory.clone()))?;
        let test = Corpus::new(test_docs, Some(inventory.clone()))?;
        let (report, _cm) = classify(config, seed, &train, &test, &mut NoopHook)?;
        scores.push(FoldScore {
            fold,
            n_train,
            n_test,
            accuracy: report.accuracy,
            macro_f1: report.macro_avg.f1,
        });
    }
    let n = scores.len() as f64;
    let mean_accuracy = scores.iter().map(|s| s.accuracy).sum::<f64>() / n;
    let mean_macro_f1 = scores.iter().map(|s| s.macro_f1).sum::<f64>() / n;
    Ok(CvReport { folds: scores, mean_accuracy, mean_macro_f1 })
}
