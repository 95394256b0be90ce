//! Evaluation: confusion matrices, per-class precision/recall/F1 and
//! sensitivity/specificity with support-weighted averages, and MSE
//! reports for regression.
//!
//! Per class c the counts are one-vs-rest: sensitivity equals the recall
//! TP/(TP+FN) and specificity the true-negative rate TN/(TN+FP); F1 is the
//! harmonic mean of precision and recall. Averages weight each class by
//! its support. A zero denominator scores 0 and raises a flag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K x K count matrix indexed (true class, predicted class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: usize, counts: Vec<usize>) -> Result<Self> {
        if classes == 0 || counts.len() != classes * classes {
            return Err(Error::InvalidArgument(format!(
                "confusion matrix needs {classes}x{classes} counts, got {}",
                counts.len()
            )));
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> usize {
        self.counts[true_class * self.classes + predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Documents whose true class is `c` (row sum).
    pub fn support(&self, c: usize) -> usize {
        (0..self.classes).map(|p| self.count(c, p)).sum()
    }

    /// One-vs-rest counts (TP, FP, FN, TN) for class `c`.
    pub fn one_vs_rest(&self, c: usize) -> (usize, usize, usize, usize) {
        let tp = self.count(c, c);
        let fp: usize = (0..self.classes)
            .filter(|&t| t != c)
            .map(|t| self.count(t, c))
            .sum();
        let fn_: usize = (0..self.classes)
            .filter(|&p| p != c)
            .map(|p| self.count(c, p))
            .sum();
        let tn = self.total() - tp - fp - fn_;
        (tp, fp, fn_, tn)
    }
}

/// Tallies predictions against labels into a confusion matrix.
pub fn confusion(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "confusion",
            lhs: vec![predictions.len()],
            rhs: vec![labels.len()],
        });
    }
    let mut counts = vec![0usize; classes * classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        if p >= classes || t >= classes {
            return Err(Error::Validation(format!(
                "class {} outside 0..{classes}",
                p.max(t)
            )));
        }
        counts[t * classes + p] += 1;
    }
    ConfusionMatrix::from_counts(classes, counts)
}

/// Scores for one class (one-vs-rest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub support: usize,
    /// Set when a zero denominator forced a score to 0.
    pub zero_division: bool,
}

/// Per-class scores plus support-weighted averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassScores>,
    pub weighted_f1: f64,
    pub weighted_sensitivity: f64,
    pub weighted_specificity: f64,
    pub accuracy: f64,
    pub total: usize,
}

impl ClassificationReport {
    /// Mean of the per-class recalls (unweighted).
    pub fn macro_recall(&self) -> f64 {
        let k = self.per_class.len() as f64;
        self.per_class.iter().map(|c| c.recall).sum::<f64>() / k
    }
}

fn ratio(numerator: usize, denominator: usize, flag: &mut bool) -> f64 {
    if denominator == 0 {
        *flag = true;
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Class-size weighted average: sum(v_c * support_c) / sum(support_c).
pub fn support_weighted(values: &[f64], supports: &[usize]) -> f64 {
    let total: usize = supports.iter().sum();
    if total == 0 {
        return 0.0;
    }
    values
        .iter()
        .zip(supports)
        .map(|(v, &s)| v * s as f64)
        .sum::<f64>()
        / total as f64
}

/// Derives the full report from a confusion matrix.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument(
            "cannot report on an empty confusion matrix".into(),
        ));
    }
    let mut per_class = Vec::with_capacity(cm.classes());
    let mut correct = 0usize;

    for c in 0..cm.classes() {
        let (tp, fp, fn_, tn) = cm.one_vs_rest(c);
        correct += tp;
        let mut zero_division = false;
        let precision = ratio(tp, tp + fp, &mut zero_division);
        let recall = ratio(tp, tp + fn_, &mut zero_division);
        let specificity = ratio(tn, tn + fp, &mut zero_division);
        let f1 = if precision + recall == 0.0 {
            zero_division = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassScores {
            precision,
            recall,
            f1,
            sensitivity: recall,
            specificity,
            support: cm.support(c),
            zero_division,
        });
    }
    let supports: Vec<usize> = per_class.iter().map(|c| c.support).collect();
    let collect = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).collect::<Vec<_>>();
    Ok(ClassificationReport {
        weighted_f1: support_weighted(&collect(|c| c.f1), &supports),
        weighted_sensitivity: support_weighted(&collect(|c| c.sensitivity), &supports),
        weighted_specificity: support_weighted(&collect(|c| c.specificity), &supports),
        accuracy: correct as f64 / total as f64,
        total,
        per_class,
    })
}

/// Per-dimension mean squared error plus the overall mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub dimensions: Vec<String>,
    pub per_dimension_mse: Vec<f64>,
    pub mean_mse: f64,
    pub total: usize,
}

/// MSE per dimension over parallel prediction/target rows.
pub fn regression_report(
    predictions: &[Vec<f64>],
    targets: &[Vec<f64>],
    dimensions: &[String],
) -> Result<RegressionReport> {
    if predictions.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            op: "regression_report",
            lhs: vec![predictions.len()],
            rhs: vec![targets.len()],
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let dims = dimensions.len();
    let mut sums = vec![0.0; dims];
    for (row, (p, t)) in predictions.iter().zip(targets).enumerate() {
        if p.len() != dims || t.len() != dims {
            return Err(Error::ShapeMismatch {
                op: "regression_report",
                lhs: vec![row, p.len()],
                rhs: vec![row, t.len()],
            });
        }
        for d in 0..dims {
            let diff = p[d] - t[d];
            sums[d] += diff * diff;
        }
    }
    let n = predictions.len() as f64;
    let per_dimension_mse: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    let mean_mse = per_dimension_mse.iter().sum::<f64>() / dims as f64;
    Ok(RegressionReport {
        dimensions: dimensions.to_vec(),
        per_dimension_mse,
        mean_mse,
        total: predictions.len(),
    })
}
