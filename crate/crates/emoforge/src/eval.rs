//! Evaluation: confusion matrices, per-class precision/recall/F1 with
//! macro/micro/weighted averages, and the clustering agreement scores
//! (adjusted Rand index, homogeneity/completeness/V-measure).
//!
//! Conventions, pinned by tests: any precision/recall/F1 with a zero
//! denominator is 0.0; ARI of two degenerate-but-identical partitions is
//! 1.0; V-measure components use natural logarithms and an entropy of zero
//! yields a score of 1.0.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::EmotionLabel;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("prediction and gold label lists differ in length: {truth} vs {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label {label:?} does not appear in the evaluation label set")]
    UnknownLabel { label: String },
    #[error("evaluation needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
}

/// Square matrix of counts indexed `[true label][predicted label]`, with a
/// fixed label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<EmotionLabel>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn labels(&self) -> &[EmotionLabel] {
        &self.labels
    }

    pub fn count(&self, true_idx: usize, pred_idx: usize) -> u64 {
        self.counts[true_idx][pred_idx]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Row sum: number of gold instances of class `i` (its support).
    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Column sum: number of times class `i` was predicted.
    pub fn col_sum(&self, i: usize) -> u64 {
        self.counts.iter().map(|row| row[i]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Builds a confusion matrix over an explicit label order. Every label in
/// `y_true`/`y_pred` must be in `labels`; classes without instances simply
/// produce zero rows/columns.
pub fn confusion(
    y_true: &[EmotionLabel],
    y_pred: &[EmotionLabel],
    labels: &[EmotionLabel],
) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::TooFewPoints { min: 1, got: 0 });
    }
    let index: HashMap<&EmotionLabel, usize> =
        labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let lookup = |l: &EmotionLabel| {
        index.get(l).copied().ok_or_else(|| EvalError::UnknownLabel {
            label: l.as_str().to_string(),
        })
    };
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[lookup(t)?][lookup(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassMetrics {
    pub label: EmotionLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class metrics plus the three standard aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<PerClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: AverageMetrics,
    pub micro_avg: AverageMetrics,
    pub weighted_avg: AverageMetrics,
    pub total_support: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn f1(p: f64, r: f64) -> f64 {
    ratio(2.0 * p * r, p + r)
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.trace() as f64, cm.total() as f64)
}

/// Derives the full report from a confusion matrix. The macro average is
/// the unweighted mean over every class in the label set (zero-support
/// classes included); the weighted average weights each class by its
/// support; the micro average pools true/false positives globally.
pub fn classification_report(cm: &ConfusionMatrix) -> ClassificationReport {
    let n_labels = cm.labels.len();
    let total = cm.total();
    let mut per_class = Vec::with_capacity(n_labels);
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0u64, 0u64, 0u64);
    for i in 0..n_labels {
        let tp = cm.counts[i][i];
        let fp = cm.col_sum(i) - tp;
        let fneg = cm.row_sum(i) - tp;
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fneg;
        let precision = ratio(tp as f64, (tp + fp) as f64);
        let recall = ratio(tp as f64, (tp + fneg) as f64);
        per_class.push(PerClassMetrics {
            label: cm.labels[i].clone(),
            precision,
            recall,
            f1: f1(precision, recall),
            support: cm.row_sum(i),
        });
    }

    let k = n_labels as f64;
    let macro_avg = AverageMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / k,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / k,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / k,
    };

    let micro_p = ratio(tp_sum as f64, (tp_sum + fp_sum) as f64);
    let micro_r = ratio(tp_sum as f64, (tp_sum + fn_sum) as f64);
    let micro_avg = AverageMetrics {
        precision: micro_p,
        recall: micro_r,
        f1: f1(micro_p, micro_r),
    };

    let weight = |m: &PerClassMetrics| m.support as f64 / total as f64;
    let weighted_avg = AverageMetrics {
        precision: per_class.iter().map(|m| weight(m) * m.precision).sum(),
        recall: per_class.iter().map(|m| weight(m) * m.recall).sum(),
        f1: per_class.iter().map(|m| weight(m) * m.f1).sum(),
    };

    ClassificationReport {
        per_class,
        accuracy: accuracy(cm),
        macro_avg,
        micro_avg,
        weighted_avg,
        total_support: total,
    }
}

/// Contingency counts between two partitions of the same points, plus the
/// marginals. Works for any hashable label type on either side.
struct Contingency {
    cells: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    n: u64,
    n_rows: usize,
    n_cols: usize,
}

fn contingency<A, B>(a: &[A], b: &[B]) -> Result<Contingency, EvalError>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            truth: a.len(),
            pred: b.len(),
        });
    }
    let mut row_ids: HashMap<&A, usize> = HashMap::new();
    let mut col_ids: HashMap<&B, usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let next_row = row_ids.len();
        let i = *row_ids.entry(x).or_insert(next_row);
        let next_col = col_ids.len();
        let j = *col_ids.entry(y).or_insert(next_col);
        pairs.push((i, j));
    }
    let (n_rows, n_cols) = (row_ids.len(), col_ids.len());
    let mut cells = vec![0u64; n_rows * n_cols];
    let mut row_sums = vec![0u64; n_rows];
    let mut col_sums = vec![0u64; n_cols];
    for (i, j) in pairs {
        cells[i * n_cols + j] += 1;
        row_sums[i] += 1;
        col_sums[j] += 1;
    }
    Ok(Contingency {
        cells,
        row_sums,
        col_sums,
        n: a.len() as u64,
        n_rows,
        n_cols,
    })
}

fn comb2(x: u64) -> i128 {
    let x = i128::from(x);
    x * (x - 1) / 2
}

/// Adjusted Rand index between two partitions, computed in exact integer
/// arithmetic before one final division. Returns 1.0 for two partitions in
/// degenerate but perfect agreement (the denominator-zero cases).
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64, EvalError>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    let c = contingency(a, b)?;
    if c.n < 2 {
        return Err(EvalError::TooFewPoints {
            min: 2,
            got: c.n as usize,
        });
    }
    let index: i128 = c.cells.iter().map(|&x| comb2(x)).sum();
    let sum_a: i128 = c.row_sums.iter().map(|&x| comb2(x)).sum();
    let sum_b: i128 = c.col_sums.iter().map(|&x| comb2(x)).sum();
    let total = comb2(c.n);
    // ARI = (index - E) / (max - E) with E = sum_a*sum_b/total and
    // max = (sum_a+sum_b)/2; multiplying through by 2*total keeps every
    // intermediate an integer.
    let numerator = 2 * (index * total - sum_a * sum_b);
    let denominator = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v: f64,
}

/// Homogeneity, completeness and their harmonic mean (V-measure), with
/// natural-log entropies. `a` is the reference (class) partition and `b`
/// the candidate (cluster) partition.
pub fn v_measure<A, B>(a: &[A], b: &[B]) -> Result<VMeasure, EvalError>
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    let c = contingency(a, b)?;
    if c.n == 0 {
        return Err(EvalError::TooFewPoints { min: 1, got: 0 });
    }
    let n = c.n as f64;
    let entropy = |sums: &[u64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_class = entropy(&c.row_sums);
    let h_cluster = entropy(&c.col_sums);

    // H(class | cluster) and H(cluster | class) from the same cell pass
    let mut h_class_given_cluster = 0.0;
    let mut h_cluster_given_class = 0.0;
    for i in 0..c.n_rows {
        for j in 0..c.n_cols {
            let nij = c.cells[i * c.n_cols + j];
            if nij == 0 {
                continue;
            }
            let p = nij as f64 / n;
            h_class_given_cluster -= p * (nij as f64 / c.col_sums[j] as f64).ln();
            h_cluster_given_class -= p * (nij as f64 / c.row_sums[i] as f64).ln();
        }
    }

    let homogeneity = if h_class == 0.0 {
        1.0
    } else {
        1.0 - h_class_given_cluster / h_class
    };
    let completeness = if h_cluster == 0.0 {
        1.0
    } else {
        1.0 - h_cluster_given_class / h_cluster
    };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure {
        homogeneity,
        completeness,
        v,
    })
}
