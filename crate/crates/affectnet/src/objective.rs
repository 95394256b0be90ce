//! Loss functions: class-weighted cross-entropy for imbalanced
//! classification and mean squared error for regression heads.
//!
//! Each loss comes in two forms: a plain value for evaluation and a tape
//! node for training. The weighted loss multiplies each sample's negative
//! log-likelihood by the inverse relative size of its class, so every
//! class contributes equally to the objective instead of the majority
//! class dominating it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{NodeId, Tape, LOG_CLAMP};

/// Per-class loss weights `w_k = N / (K * n_k)`. Balanced classes give
/// all-ones weights, and the weights of all samples sum back to N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    weights: Vec<f64>,
    total: usize,
    counts: Vec<usize>,
}

impl ClassWeights {
    /// Uniform weights: the unweighted objective.
    pub fn uniform(num_classes: usize) -> Self {
        Self {
            weights: vec![1.0; num_classes],
            total: 0,
            counts: vec![0; num_classes],
        }
    }

    pub fn weight(&self, class: usize) -> f64 {
        self.weights[class]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }
}

/// Computes the inverse-class-frequency weights from training labels.
/// Every class in 0..K must occur at least once.
pub fn class_weights(labels: impl IntoIterator<Item = usize>, num_classes: usize) -> Result<ClassWeights> {
    if num_classes == 0 {
        return Err(Error::InvalidArgument("num_classes must be positive".into()));
    }
    let mut counts = vec![0usize; num_classes];
    let mut total = 0usize;
    for label in labels {
        if label >= num_classes {
            return Err(Error::Validation(format!(
                "label {label} outside 0..{num_classes}"
            )));
        }
        counts[label] += 1;
        total += 1;
    }
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class });
    }
    let n = total as f64;
    let k = num_classes as f64;
    let weights = counts.iter().map(|&c| n / (k * c as f64)).collect();
    Ok(ClassWeights {
        weights,
        total,
        counts,
    })
}

/// `w_y * (-ln p_y)` on plain values. The probability is clamped at
/// 1e-12 before the log.
pub fn weighted_ce(probabilities: &[f64], label: usize, weights: &ClassWeights) -> Result<f64> {
    if label >= probabilities.len() {
        return Err(Error::IndexOutOfRange {
            index: label,
            size: probabilities.len(),
        });
    }
    let p = probabilities[label].max(LOG_CLAMP);
    Ok(-weights.weight(label) * p.ln())
}

/// Tape form of [`weighted_ce`]: `probabilities` must be a 1xK node.
pub fn weighted_ce_node(
    tape: &mut Tape,
    probabilities: NodeId,
    label: usize,
    weights: &ClassWeights,
) -> Result<NodeId> {
    tape.neg_log_pick(probabilities, label, weights.weight(label))
}

/// Mean of squared coordinate differences on plain values.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            op: "mse",
            lhs: vec![1, predictions.len()],
            rhs: vec![1, targets.len()],
        });
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Tape form of [`mse_loss`]: `predictions` and `targets` must be nodes of
/// equal shape; the result is a scalar node.
pub fn mse_loss_node(tape: &mut Tape, predictions: NodeId, targets: NodeId) -> Result<NodeId> {
    let diff = tape.sub(predictions, targets)?;
    let squared = tape.hadamard(diff, diff)?;
    Ok(tape.mean(squared))
}
