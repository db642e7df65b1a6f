//! Report rendering. All three formats are pure functions of the report
//! value: rendering the same report twice yields identical bytes.
//!
//! Text layout (classification):
//!
//! ```text
//! <header lines>
//!
//! <label padding> precision    recall  f1-score   support
//! <label>            0.0000    0.0000    0.0000         0   (one row per class)
//! accuracy                               0.0000         0
//! macro avg          ...
//! micro avg          ...
//! weighted avg       ...
//!
//! confusion matrix (rows: true, cols: predicted, % of row)
//! <row per class>
//! ```

use std::fmt::Write as _;

use super::grid::GridOutcome;
use super::pipeline::{ClusterContingency, ClusteringScores, RunOutcome, RunReport};
use crate::eval::{ClassificationReport, ConfusionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<ReportFormat, String> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format {other:?}: expected text, csv or json")),
        }
    }
}

fn header_lines(report: &RunReport, out: &mut String) {
    let task = match report.outcome {
        RunOutcome::Classification { .. } => "classification",
        RunOutcome::Clustering { .. } => "clustering",
    };
    let _ = writeln!(out, "emoforge v{} run report", report.version);
    let _ = writeln!(out, "task: {task}");
    if let Some(cfg) = &report.config {
        let _ = writeln!(out, "model: {}", cfg.model.describe());
        let _ = writeln!(out, "feature: {}", cfg.feature.describe());
    }
    if let Some(seed) = report.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    match report.n_train {
        Some(n) => {
            let _ = writeln!(out, "documents: {} train, {} evaluated", n, report.n_eval);
        }
        None => {
            let _ = writeln!(out, "documents: {} evaluated", report.n_eval);
        }
    }
}

fn classification_text(report: &ClassificationReport, cm: &ConfusionMatrix, out: &mut String) {
    let label_width = report
        .per_class
        .iter()
        .map(|c| c.label.as_str().len())
        .chain(["weighted avg".len()])
        .max()
        .unwrap_or(12);

    let _ = writeln!(
        out,
        "{:<label_width$} {:>9} {:>9} {:>9} {:>9}",
        "", "precision", "recall", "f1-score", "support"
    );
    for c in &report.per_class {
        let _ = writeln!(
            out,
            "{:<label_width$} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            c.label.as_str(),
            c.precision,
            c.recall,
            c.f1,
            c.support
        );
    }
    let _ = writeln!(
        out,
        "{:<label_width$} {:>9} {:>9} {:>9.4} {:>9}",
        "accuracy", "", "", report.accuracy, report.total_support
    );
    for (name, avg) in [
        ("macro avg", &report.macro_avg),
        ("micro avg", &report.micro_avg),
        ("weighted avg", &report.weighted_avg),
    ] {
        let _ = writeln!(
            out,
            "{:<label_width$} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            name, avg.precision, avg.recall, avg.f1, report.total_support
        );
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "confusion matrix (rows: true, cols: predicted, % of row)");
    let col_width = cm
        .labels()
        .iter()
        .map(|l| l.as_str().len().max(6))
        .max()
        .unwrap_or(6);
    let mut head = format!("{:<label_width$}", "");
    for l in cm.labels() {
        let _ = write!(head, " {:>col_width$}", l.as_str());
    }
    let _ = writeln!(out, "{head}");
    for (i, l) in cm.labels().iter().enumerate() {
        let total = cm.row_sum(i);
        let mut line = format!("{:<label_width$}", l.as_str());
        for j in 0..cm.labels().len() {
            let pct = if total == 0 {
                0.0
            } else {
                100.0 * cm.count(i, j) as f64 / total as f64
            };
            let _ = write!(line, " {:>col_width$.1}", pct);
        }
        let _ = writeln!(out, "{line}");
    }
}

fn clustering_text(scores: &ClusteringScores, table: &ClusterContingency, out: &mut String) {
    let _ = writeln!(out, "adjusted rand index: {:.4}", scores.ari);
    let _ = writeln!(out, "homogeneity:         {:.4}", scores.homogeneity);
    let _ = writeln!(out, "completeness:        {:.4}", scores.completeness);
    let _ = writeln!(out, "v-measure:           {:.4}", scores.v_measure);
    let _ = writeln!(
        out,
        "inertia: {:.4} ({} iterations, restart {})",
        scores.inertia, scores.n_iter, scores.restart
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "contingency (rows: cluster, cols: gold class)");
    let col_width = table
        .labels
        .iter()
        .map(|l| l.as_str().len().max(6))
        .max()
        .unwrap_or(6);
    let id_width = "cluster".len();
    let mut head = format!("{:<id_width$}", "cluster");
    for l in &table.labels {
        let _ = write!(head, " {:>col_width$}", l.as_str());
    }
    let _ = writeln!(out, "{head}");
    for (cluster, row) in table.counts.iter().enumerate() {
        let mut line = format!("{cluster:<id_width$}");
        for &count in row {
            let _ = write!(line, " {:>col_width$}", count);
        }
        let _ = writeln!(out, "{line}");
    }
}

fn classification_csv(report: &ClassificationReport, out: &mut String) {
    out.push_str("label,precision,recall,f1,support\n");
    for c in &report.per_class {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{}",
            c.label.as_str(),
            c.precision,
            c.recall,
            c.f1,
            c.support
        );
    }
    let _ = writeln!(out, "accuracy,,,{:.6},{}", report.accuracy, report.total_support);
    for (name, avg) in [
        ("macro avg", &report.macro_avg),
        ("micro avg", &report.micro_avg),
        ("weighted avg", &report.weighted_avg),
    ] {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{}",
            name, avg.precision, avg.recall, avg.f1, report.total_support
        );
    }
}

fn clustering_csv(scores: &ClusteringScores, table: &ClusterContingency, out: &mut String) {
    out.push_str("metric,value\n");
    let _ = writeln!(out, "ari,{:.6}", scores.ari);
    let _ = writeln!(out, "homogeneity,{:.6}", scores.homogeneity);
    let _ = writeln!(out, "completeness,{:.6}", scores.completeness);
    let _ = writeln!(out, "v_measure,{:.6}", scores.v_measure);
    let _ = writeln!(out, "inertia,{:.6}", scores.inertia);
    let _ = writeln!(out);
    let labels: Vec<&str> = table.labels.iter().map(|l| l.as_str()).collect();
    let _ = writeln!(out, "cluster,{}", labels.join(","));
    for (cluster, row) in table.counts.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{cluster},{}", cells.join(","));
    }
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
        }
        ReportFormat::Text => {
            header_lines(report, &mut out);
            out.push('\n');
            match &report.outcome {
                RunOutcome::Classification { report: cr, confusion } => {
                    classification_text(cr, confusion, &mut out);
                }
                RunOutcome::Clustering { scores, contingency } => {
                    clustering_text(scores, contingency, &mut out);
                }
            }
        }
        ReportFormat::Csv => match &report.outcome {
            RunOutcome::Classification { report: cr, .. } => classification_csv(cr, &mut out),
            RunOutcome::Clustering { scores, contingency } => {
                clustering_csv(scores, contingency, &mut out);
            }
        },
    }
    out
}

pub fn render_grid(grid: &GridOutcome, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(grid).expect("grid serializes");
            out.push('\n');
        }
        ReportFormat::Text => {
            let clustering = matches!(
                grid.runs.first().map(|r| &r.report.outcome),
                Some(RunOutcome::Clustering { .. })
            );
            let (primary, secondary) = if clustering {
                ("ari", "v-measure")
            } else {
                ("accuracy", "macro-f1")
            };
            let _ = writeln!(out, "grid over {} ({} runs)", grid.axis, grid.runs.len());
            let value_width = grid
                .runs
                .iter()
                .map(|r| r.value.to_string().len())
                .chain([grid.axis.len()])
                .max()
                .unwrap_or(6);
            let _ = writeln!(
                out,
                "  {:>value_width$} {:>10} {:>10}",
                grid.axis, primary, secondary
            );
            for (i, run) in grid.runs.iter().enumerate() {
                let (p, s) = run.report.outcome.headline_scores();
                let marker = if i == grid.best { '*' } else { ' ' };
                let _ = writeln!(
                    out,
                    "{marker} {:>value_width$} {:>10.4} {:>10.4}",
                    run.value.to_string(),
                    p,
                    s
                );
            }
            let best = grid.best_run();
            let (p, _) = best.report.outcome.headline_scores();
            let _ = writeln!(out, "best: {} = {} ({primary} {:.4})", grid.axis, best.value, p);
        }
        ReportFormat::Csv => {
            let clustering = matches!(
                grid.runs.first().map(|r| &r.report.outcome),
                Some(RunOutcome::Clustering { .. })
            );
            let (primary, secondary) =
                if clustering { ("ari", "v_measure") } else { ("accuracy", "macro_f1") };
            let _ = writeln!(out, "{},{primary},{secondary},best", grid.axis);
            for (i, run) in grid.runs.iter().enumerate() {
                let (p, s) = run.report.outcome.headline_scores();
                let _ = writeln!(
                    out,
                    "{},{:.6},{:.6},{}",
                    run.value,
                    p,
                    s,
                    if i == grid.best { "true" } else { "false" }
                );
            }
        }
    }
    out
}
