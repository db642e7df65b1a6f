//! `emoforge` command-line entry point. The heavy lifting lives in the
//! library; this file is argument parsing, dispatch and exit codes.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use emoforge::corpus::{
    load_corpus, load_corpus_with_inventory, load_tagged_corpus, save_corpus, CorpusFormat,
    SplitRatio,
};
use emoforge::harness::{
    fit_model, parse_axis_values, read_file, render_grid, render_report, resolve_seed,
    run_cross_validation, run_experiment, run_grid, write_file, CvReport, ExperimentConfig,
    GridOutcome, HarnessError, LoadedModel, ReportFormat, RunReport,
};
use emoforge::postag::{tag_accuracy, train_hmm, viterbi};
use emoforge::text::tokenize;

#[derive(Parser)]
#[command(
    name = "emoforge",
    version,
    about = "Emotion classification experiments for Bangla text",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a labeled corpus into stratified train and test files
    Split {
        /// Labeled corpus (.jsonl or .tsv)
        #[arg(long)]
        input: PathBuf,
        /// Where to write the training portion
        #[arg(long)]
        train_out: PathBuf,
        /// Where to write the test portion
        #[arg(long)]
        test_out: PathBuf,
        /// train:test proportion
        #[arg(long, default_value = "4:1")]
        ratio: String,
        /// Shuffle seed (default: EMOFORGE_SEED or 42)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train an HMM POS tagger; tag text or score a held-out fraction
    Tag {
        /// Tagged corpus: `surface<TAB>tag` lines, blank line between sentences
        #[arg(long)]
        pos_corpus: PathBuf,
        /// Add-alpha smoothing strength
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Tag this string
        #[arg(long)]
        text: Option<String>,
        /// Tag each non-empty line of this file
        #[arg(long)]
        input: Option<PathBuf>,
        /// Hold out this fraction of sentences and report tag accuracy
        #[arg(long)]
        holdout: Option<f64>,
        /// Holdout shuffle seed (default: EMOFORGE_SEED or 42)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a configured experiment: report, saved model, or cross-validation
    Train {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Save the trained model here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the report as JSON to this path
        #[arg(long)]
        report: Option<PathBuf>,
        /// Report format on stdout
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Run stratified k-fold cross-validation instead of a single split
        #[arg(long)]
        folds: Option<usize>,
        /// Override the config seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label new documents with a saved model
    Predict {
        /// Saved model file
        #[arg(long)]
        model: PathBuf,
        /// Documents to label: JSONL with "id" and "text" fields
        #[arg(long)]
        input: PathBuf,
        /// Output format
        #[arg(long, value_enum, default_value_t = PredictFormat::Tsv)]
        format: PredictFormat,
    },
    /// Score a saved model against a labeled test set
    Eval {
        /// Saved model file
        #[arg(long)]
        model: PathBuf,
        /// Labeled test corpus (.jsonl or .tsv)
        #[arg(long)]
        test: PathBuf,
        /// Report format
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
    /// Sweep one hyperparameter axis and summarize the runs
    Grid {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Axis spec, e.g. `k=2,3,4,5,6,7` or `gamma=0.3,0.4,0.6,0.8`
        #[arg(long)]
        axis: String,
        /// Cap on concurrent runs (default: one per core)
        #[arg(long)]
        jobs: Option<usize>,
        /// Summary format on stdout
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Also write the full grid outcome as JSON to this path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a k-means clustering experiment
    Cluster {
        /// Experiment config (JSON, kmeans model)
        #[arg(long)]
        config: PathBuf,
        /// Report format on stdout
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Also write the report as JSON to this path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-render a stored JSON report
    Report {
        /// A JSON run report, grid outcome or cross-validation report
        #[arg(long)]
        input: PathBuf,
        /// Target format
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PredictFormat {
    Tsv,
    Json,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes; everything else is a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Split { input, train_out, test_out, ratio, seed } => {
            cmd_split(&input, &train_out, &test_out, &ratio, seed)
        }
        Command::Tag { pos_corpus, alpha, text, input, holdout, seed } => {
            cmd_tag(&pos_corpus, alpha, text, input, holdout, seed)
        }
        Command::Train { config, out, report, format, folds, seed } => {
            cmd_train(&config, out, report, format, folds, seed)
        }
        Command::Predict { model, input, format } => cmd_predict(&model, &input, format),
        Command::Eval { model, test, format } => cmd_eval(&model, &test, format),
        Command::Grid { config, axis, jobs, format, out, seed } => {
            cmd_grid(&config, &axis, jobs, format, out, seed)
        }
        Command::Cluster { config, format, out, seed } => cmd_cluster(&config, format, out, seed),
        Command::Report { input, format } => cmd_report(&input, format),
    }
}

fn corpus_format(path: &Path) -> Result<CorpusFormat, HarnessError> {
    CorpusFormat::from_path(path).ok_or_else(|| {
        HarnessError::config(format!(
            "cannot infer corpus format of {}: use a .jsonl or .tsv extension",
            path.display()
        ))
    })
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_split(
    input: &Path,
    train_out: &Path,
    test_out: &Path,
    ratio: &str,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let ratio = SplitRatio::parse(ratio).map_err(|e| HarnessError::config(e.to_string()))?;
    let corpus = load_corpus(input, corpus_format(input)?)?;
    let seed = resolve_seed(seed)?;
    let (train, test) = corpus.stratified_split(ratio, seed)?;
    for (part, path) in [(&train, train_out), (&test, test_out)] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
        save_corpus(part, path, corpus_format(path)?)?;
    }
    println!(
        "{} documents -> {} train ({}), {} test ({})",
        corpus.len(),
        train.len(),
        train_out.display(),
        test.len(),
        test_out.display()
    );
    Ok(())
}

fn cmd_tag(
    pos_corpus: &Path,
    alpha: f64,
    text: Option<String>,
    input: Option<PathBuf>,
    holdout: Option<f64>,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let modes = [text.is_some(), input.is_some(), holdout.is_some()];
    if modes.iter().filter(|m| **m).count() != 1 {
        return Err(HarnessError::config("pass exactly one of --text, --input or --holdout"));
    }
    let sentences = load_tagged_corpus(pos_corpus)?;

    if let Some(fraction) = holdout {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(HarnessError::config("--holdout must be strictly between 0 and 1"));
        }
        if sentences.len() < 2 {
            return Err(HarnessError::config("a holdout needs at least 2 tagged sentences"));
        }
        let seed = resolve_seed(seed)?;
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_held = ((sentences.len() as f64 * fraction).round() as usize)
            .clamp(1, sentences.len() - 1);
        let held: Vec<_> = order[..n_held].iter().map(|&i| sentences[i].clone()).collect();
        let kept: Vec<_> = order[n_held..].iter().map(|&i| sentences[i].clone()).collect();
        let model = train_hmm(&kept, alpha)?;
        let accuracy = tag_accuracy(&model, &held)?;
        println!("sentences: {} train, {} held out", kept.len(), held.len());
        println!("tag accuracy: {accuracy:.4}");
        return Ok(());
    }

    let model = train_hmm(&sentences, alpha)?;
    let lines: Vec<String> = match (text, input) {
        (Some(t), None) => vec![t],
        (None, Some(path)) => read_file(&path)?.lines().map(str::to_string).collect(),
        _ => unreachable!("mode count checked above"),
    };
    let mut first = true;
    for line in lines {
        let tokens = tokenize(&line);
        if tokens.is_empty() {
            continue;
        }
        if !first {
            println!();
        }
        first = false;
        let tags = viterbi(&model, &tokens)?;
        for (token, tag) in tokens.iter().zip(&tags) {
            println!("{token}\t{tag}");
        }
    }
    Ok(())
}

fn cmd_train(
    config: &Path,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    format: ReportFormat,
    folds: Option<usize>,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.seed = Some(cfg.resolve_seed(seed)?);

    if let Some(path) = &out {
        let saved = fit_model(&cfg)?;
        saved.save(path)?;
        eprintln!("model written to {}", path.display());
    }

    if let Some(folds) = folds {
        let cv = run_cross_validation(&cfg, folds)?;
        print!("{}", render_cv(&cv, format));
        if let Some(path) = report {
            write_file(&path, &to_pretty_json(&cv))?;
        }
        return Ok(());
    }

    if !cfg.model.is_clustering() && cfg.paths.test.is_none() {
        if out.is_none() {
            return Err(HarnessError::config(
                "nothing to do: the config has no test set; pass --out to save a model \
                 or --folds for cross-validation",
            ));
        }
        return Ok(());
    }
    let run = run_experiment(&cfg)?;
    print!("{}", render_report(&run, format));
    if let Some(path) = report {
        write_file(&path, &render_report(&run, ReportFormat::Json))?;
    } else if let Some(dir) = &cfg.paths.output_dir {
        let path = cfg.resolved(dir).join("report.json");
        write_file(&path, &render_report(&run, ReportFormat::Json))?;
    }
    Ok(())
}

fn render_cv(cv: &CvReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => to_pretty_json(cv),
        ReportFormat::Csv => {
            let mut s = String::from("fold,n_train,n_test,accuracy,macro_f1\n");
            for f in &cv.folds {
                s.push_str(&format!(
                    "{},{},{},{:.6},{:.6}\n",
                    f.fold, f.n_train, f.n_test, f.accuracy, f.macro_f1
                ));
            }
            s.push_str(&format!("mean,,,{:.6},{:.6}\n", cv.mean_accuracy, cv.mean_macro_f1));
            s
        }
        ReportFormat::Text => {
            let mut s = format!("cross-validation over {} folds\n\n", cv.folds.len());
            s.push_str("  fold   train    test  accuracy  macro-f1\n");
            for f in &cv.folds {
                s.push_str(&format!(
                    "{:>6}  {:>6}  {:>6}  {:>8.4}  {:>8.4}\n",
                    f.fold, f.n_train, f.n_test, f.accuracy, f.macro_f1
                ));
            }
            s.push_str(&format!(
                "\nmean accuracy {:.4}, mean macro-f1 {:.4}\n",
                cv.mean_accuracy, cv.mean_macro_f1
            ));
            s
        }
    }
}

fn cmd_predict(model: &Path, input: &Path, format: PredictFormat) -> Result<(), HarnessError> {
    let model = LoadedModel::load(model)?;
    let docs = read_unlabeled_jsonl(input)?;
    let texts: Vec<&str> = docs.iter().map(|(_, text)| text.as_str()).collect();
    let predictions = model.predict_texts(&texts)?;
    match format {
        PredictFormat::Tsv => {
            for ((id, _), p) in docs.iter().zip(&predictions) {
                println!("{id}\t{p}");
            }
        }
        PredictFormat::Json => {
            let rows: Vec<serde_json::Value> = docs
                .iter()
                .zip(&predictions)
                .map(|((id, _), p)| serde_json::json!({ "id": id, "prediction": p.to_string() }))
                .collect();
            print!("{}", to_pretty_json(&rows));
        }
    }
    Ok(())
}

/// Reads prediction input: JSONL with string fields `id` and `text`
/// (a `label` field, if present, is ignored).
fn read_unlabeled_jsonl(path: &Path) -> Result<Vec<(String, String)>, HarnessError> {
    if CorpusFormat::from_path(path) != Some(CorpusFormat::Jsonl) {
        return Err(HarnessError::config(format!(
            "predict reads JSONL documents; got {}",
            path.display()
        )));
    }
    let raw = read_file(path)?;
    let mut docs = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let json_err = |msg: String| HarnessError::Json {
            path: path.display().to_string(),
            msg: format!("line {}: {msg}", i + 1),
        };
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| json_err(e.to_string()))?;
        let field = |key: &str| {
            v.get(key)
                .and_then(|x| x.as_str())
                .map(str::to_string)
                .ok_or_else(|| json_err(format!("missing string field {key:?}")))
        };
        docs.push((field("id")?, field("text")?));
    }
    if docs.is_empty() {
        return Err(HarnessError::config(format!("{}: no documents", path.display())));
    }
    Ok(docs)
}

fn cmd_eval(model: &Path, test: &Path, format: ReportFormat) -> Result<(), HarnessError> {
    let model = LoadedModel::load(model)?;
    let fmt = corpus_format(test)?;
    // Clustering scores are label-agnostic, so any gold labeling is fair
    // game; classification is pinned to the saved inventory.
    let corpus = if model.saved().artifact.is_clustering() {
        load_corpus(test, fmt)?
    } else {
        load_corpus_with_inventory(test, fmt, model.labels().to_vec())?
    };
    let report = model.evaluate(&corpus)?;
    print!("{}", render_report(&report, format));
    Ok(())
}

fn cmd_grid(
    config: &Path,
    axis: &str,
    jobs: Option<usize>,
    format: ReportFormat,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.seed = Some(cfg.resolve_seed(seed)?);
    let (axis, values) = parse_axis_values(axis)?;
    let grid = run_grid(&cfg, &axis, &values, jobs)?;
    print!("{}", render_grid(&grid, format));
    if let Some(path) = out {
        write_file(&path, &render_grid(&grid, ReportFormat::Json))?;
    } else if let Some(dir) = &cfg.paths.output_dir {
        let path = cfg.resolved(dir).join(format!("grid_{axis}.json"));
        write_file(&path, &render_grid(&grid, ReportFormat::Json))?;
    }
    Ok(())
}

fn cmd_cluster(
    config: &Path,
    format: ReportFormat,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if !cfg.model.is_clustering() {
        return Err(HarnessError::config(format!(
            "cluster needs a kmeans config; this one is {}",
            cfg.model.kind()
        )));
    }
    cfg.seed = Some(cfg.resolve_seed(seed)?);
    let run = run_experiment(&cfg)?;
    print!("{}", render_report(&run, format));
    if let Some(path) = out {
        write_file(&path, &render_report(&run, ReportFormat::Json))?;
    } else if let Some(dir) = &cfg.paths.output_dir {
        let path = cfg.resolved(dir).join("report.json");
        write_file(&path, &render_report(&run, ReportFormat::Json))?;
    }
    Ok(())
}

fn cmd_report(input: &Path, format: ReportFormat) -> Result<(), HarnessError> {
    let raw = read_file(input)?;
    let json_err = |msg: String| HarnessError::Json {
        path: input.display().to_string(),
        msg,
    };
    let value: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| json_err(e.to_string()))?;
    if value.get("runs").is_some() {
        let grid: GridOutcome =
            serde_json::from_value(value).map_err(|e| json_err(e.to_string()))?;
        print!("{}", render_grid(&grid, format));
    } else if value.get("folds").is_some() {
        let cv: CvReport = serde_json::from_value(value).map_err(|e| json_err(e.to_string()))?;
        print!("{}", render_cv(&cv, format));
    } else {
        let report: RunReport =
            serde_json::from_value(value).map_err(|e| json_err(e.to_string()))?;
        print!("{}", render_report(&report, format));
    }
    Ok(())
}
