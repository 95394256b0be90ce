//! Traditional machine-learning path: bag-of-words features with tf-idf
//! weighting and L2 document normalization, fed into class-weighted
//! multinomial logistic regression (classification) or least-squares
//! linear regression, both fitted by seeded mini-batch gradient descent
//! with an L2 penalty.
//!
//! The idf is ln(D / df) with no smoothing, so a term occurring in every
//! document carries weight exactly zero. The report surface labels this
//! path "linear baseline".

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serde::{Deserialize, Serialize};

use crate::corpus::{PAD_INDEX, UNK_INDEX};
use crate::error::{Error, Result};
use crate::layers::argmax;
use crate::objective::ClassWeights;

/// Sparse feature vector: (term index, weight) pairs with strictly
/// increasing indices.
pub type SparseVector = Vec<(usize, f64)>;

pub fn dense_to_sparse(values: &[f64]) -> SparseVector {
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect()
}

/// Document frequencies and idf weights fitted on a training corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    vocab_size: usize,
    document_count: usize,
    document_frequency: Vec<usize>,
    idf: Vec<f64>,
}

impl TfidfVectorizer {
    /// Counts document frequencies over token-index sequences. Reserved
    /// indices (padding, unknown) never become features.
    pub fn fit<'a>(documents: impl IntoIterator<Item = &'a [usize]>, vocab_size: usize) -> Result<Self> {
        let mut document_frequency = vec![0usize; vocab_size];
        let mut document_count = 0usize;
        let mut seen = vec![false; vocab_size];
        for doc in documents {
            document_count += 1;
            seen.iter_mut().for_each(|s| *s = false);
            for &t in doc {
                if t < vocab_size && t != PAD_INDEX && t != UNK_INDEX && !seen[t] {
                    seen[t] = true;
                    document_frequency[t] += 1;
                }
            }
        }
        if document_count == 0 {
            return Err(Error::InvalidArgument(
                "cannot fit tf-idf on an empty corpus".into(),
            ));
        }
        let idf = document_frequency
            .iter()
            .map(|&df| {
                if df == 0 {
                    0.0
                } else {
                    (document_count as f64 / df as f64).ln()
                }
            })
            .collect();
        Ok(Self {
            vocab_size,
            document_count,
            document_frequency,
            idf,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn document_frequency(&self, term: usize) -> usize {
        self.document_frequency[term]
    }

    pub fn idf(&self, term: usize) -> f64 {
        self.idf[term]
    }

    /// tf * idf per term, L2-normalized. Terms unseen at fit time (and
    /// the reserved indices) are ignored; zero-weight terms are dropped.
    pub fn transform(&self, document: &[usize]) -> SparseVector {
        let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
        for &t in document {
            if t < self.vocab_size
                && t != PAD_INDEX
                && t != UNK_INDEX
                && self.document_frequency[t] > 0
            {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let mut features: SparseVector = counts
            .into_iter()
            .map(|(t, tf)| (t, tf as f64 * self.idf[t]))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        let norm = features.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut features {
                *w /= norm;
            }
        }
        features
    }
}

/// What the linear model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearTask {
    MultinomialLogistic,
    LinearRegression,
}

/// Gradient-descent settings for the linear models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// L2 penalty on the weights (the bias is unpenalized), applied as a
    /// proximal shrinkage step so it stays stable for any magnitude.
    pub l2: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// Dense weight rows (one per class or output dimension) plus biases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    task: LinearTask,
}

fn softmax_values(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn sparse_logits(weights: &[Vec<f64>], bias: &[f64], features: &SparseVector) -> Vec<f64> {
    weights
        .iter()
        .zip(bias)
        .map(|(row, &b)| {
            b + features
                .iter()
                .map(|&(i, v)| row.get(i).copied().unwrap_or(0.0) * v)
                .sum::<f64>()
        })
        .collect()
}

impl LinearModel {
    pub fn task(&self) -> LinearTask {
        self.task
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn weight(&self, output: usize, feature: usize) -> f64 {
        self.weights[output][feature]
    }

    fn logits(&self, features: &SparseVector) -> Vec<f64> {
        sparse_logits(&self.weights, &self.bias, features)
    }

    /// Class probabilities (logistic task).
    pub fn predict_probabilities(&self, features: &SparseVector) -> Vec<f64> {
        match self.task {
            LinearTask::MultinomialLogistic => softmax_values(&self.logits(features)),
            LinearTask::LinearRegression => self.logits(features),
        }
    }

    pub fn predict_label(&self, features: &SparseVector) -> usize {
        argmax(&self.predict_probabilities(features))
    }

    /// Affine scores (regression task).
    pub fn predict_scores(&self, features: &SparseVector) -> Vec<f64> {
        self.logits(features)
    }
}

fn check_dims(features: &[SparseVector], dim: usize) -> Result<()> {
    for (row, f) in features.iter().enumerate() {
        if let Some(&(i, _)) = f.iter().find(|&&(i, _)| i >= dim) {
            return Err(Error::ShapeMismatch {
                op: "linear features",
                lhs: vec![row, i],
                rhs: vec![dim],
            });
        }
    }
    Ok(())
}

struct Sgd {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    cfg: LinearConfig,
}

impl Sgd {
    fn new(outputs: usize, dim: usize, cfg: LinearConfig) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; outputs],
            bias: vec![0.0; outputs],
            cfg,
        }
    }

    /// One mini-batch update from accumulated gradients; returns an error
    /// if anything went non-finite.
    fn apply(
        &mut self,
        grad_w: &[Vec<(usize, f64)>],
        grad_b: &[f64],
        batch_len: f64,
        epoch: usize,
        batch: usize,
    ) -> Result<()> {
        let lr = self.cfg.learning_rate;
        let shrink = 1.0 / (1.0 + lr * self.cfg.l2);
        for (k, row) in self.weights.iter_mut().enumerate() {
            for &(i, g) in &grad_w[k] {
                row[i] -= lr * g / batch_len;
            }
            if self.cfg.l2 > 0.0 {
                for w in row.iter_mut() {
                    *w *= shrink;
                }
            }
            self.bias[k] -= lr * grad_b[k] / batch_len;
            if !self.bias[k].is_finite() || row.iter().any(|w| !w.is_finite()) {
                return Err(Error::Diverged { epoch, batch });
            }
        }
        Ok(())
    }
}

/// Multinomial logistic regression on sparse features, optionally with
/// the same inverse-class-frequency loss weights as the deep path.
pub fn train_linear_classifier(
    features: &[SparseVector],
    labels: &[usize],
    classes: usize,
    class_weights: Option<&ClassWeights>,
    dim: usize,
    cfg: &LinearConfig,
) -> Result<LinearModel> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::InvalidArgument(
            "features and labels must be non-empty and parallel".into(),
        ));
    }
    check_dims(features, dim)?;
    let mut sgd = Sgd::new(classes, dim, cfg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grad_w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); classes];
            let mut grad_b = vec![0.0; classes];
            for &doc in batch {
                let probs = softmax_values(&sparse_logits(&sgd.weights, &sgd.bias, &features[doc]));
                let y = labels[doc];
                let sample_weight = class_weights.map_or(1.0, |w| w.weight(y));
                for k in 0..classes {
                    let delta = sample_weight * (probs[k] - if k == y { 1.0 } else { 0.0 });
                    grad_b[k] += delta;
                    for &(i, v) in &features[doc] {
                        grad_w[k].push((i, delta * v));
                    }
                }
            }
            sgd.apply(&grad_w, &grad_b, batch.len() as f64, epoch, batch_index)?;
        }
    }
    Ok(LinearModel {
        weights: sgd.weights,
        bias: sgd.bias,
        task: LinearTask::MultinomialLogistic,
    })
}

/// Least-squares linear regression on sparse features.
pub fn train_linear_regressor(
    features: &[SparseVector],
    targets: &[Vec<f64>],
    dimensions: usize,
    dim: usize,
    cfg: &LinearConfig,
) -> Result<LinearModel> {
    if features.len() != targets.len() || features.is_empty() {
        return Err(Error::InvalidArgument(
            "features and targets must be non-empty and parallel".into(),
        ));
    }
    check_dims(features, dim)?;
    let mut sgd = Sgd::new(dimensions, dim, cfg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grad_w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dimensions];
            let mut grad_b = vec![0.0; dimensions];
            for &doc in batch {
                let pred = sparse_logits(&sgd.weights, &sgd.bias, &features[doc]);
                for d in 0..dimensions {
                    let residual = 2.0 * (pred[d] - targets[doc][d]) / dimensions as f64;
                    grad_b[d] += residual;
                    for &(i, v) in &features[doc] {
                        grad_w[d].push((i, residual * v));
                    }
                }
            }
            sgd.apply(&grad_w, &grad_b, batch.len() as f64, epoch, batch_index)?;
        }
    }
    Ok(LinearModel {
        weights: sgd.weights,
        bias: sgd.bias,
        task: LinearTask::LinearRegression,
    })
}

/// Predictions computed outside this crate, importable for comparison
/// reports: CSV `doc_id,predicted_label` for classification or
/// `doc_id,<dim columns>` for regression, dispatched on the header.
#[derive(Debug, Clone)]
pub enum ExternalPredictions {
    Labels(Vec<(String, String)>),
    Scores {
        dimensions: Vec<String>,
        rows: Vec<(String, Vec<f64>)>,
    },
}

pub fn load_external_predictions(path: &std::path::Path) -> crate::error::Result<ExternalPredictions> {
    use crate::error::Error;
    let content = std::fs::read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Data {
        line: 1,
        message: e.to_string(),
    })?.clone();
    if headers.get(0) != Some("doc_id") || headers.len() < 2 {
        return Err(Error::Schema(
            "external predictions need a doc_id column followed by predicted_label or score columns".into(),
        ));
    }
    let labeled = headers.get(1) == Some("predicted_label");
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let doc_id = record
            .get(0)
            .ok_or(Error::Data {
                line,
                message: "missing doc_id".into(),
            })?
            .to_string();
        if labeled {
            let label = record
                .get(1)
                .ok_or(Error::Data {
                    line,
                    message: "missing predicted_label".into(),
                })?
                .trim()
                .to_string();
            labels.push((doc_id, label));
        } else {
            let values = (1..headers.len())
                .map(|i| {
                    record
                        .get(i)
                        .unwrap_or_default()
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Data {
                            line,
                            message: format!(
                                "'{}' is not a score",
                                record.get(i).unwrap_or_default()
                            ),
                        })
                })
                .collect::<crate::error::Result<Vec<f64>>>()?;
            scores.push((doc_id, values));
        }
    }
    Ok(if labeled {
        ExternalPredictions::Labels(labels)
    } else {
        ExternalPredictions::Scores {
            dimensions: headers.iter().skip(1).map(str::to_string).collect(),
            rows: scores,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::class_weights;
    use rand::Rng;

    #[test]
    fn term_in_every_document_has_zero_weight() {
        // doc indices start at 2 (0/1 reserved)
        let docs: Vec<Vec<usize>> = vec![vec![2, 3], vec![2, 4]];
        let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
        let v = TfidfVectorizer::fit(refs, 5).unwrap();
        assert_eq!(v.idf(2), 0.0);
        let features = v.transform(&[2, 2, 2]);
        assert!(features.is_empty());
    }

    #[test]
    fn raw_weight_is_tf_times_ln_ratio() {
        let docs: Vec<Vec<usize>> = vec![vec![2, 3], vec![3, 4]];
        let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
        let v = TfidfVectorizer::fit(refs, 5).unwrap();
        // term 2 appears in 1 of 2 docs: idf = ln 2; tf 3 -> raw 3 ln 2
        let raw = 3.0 * v.idf(2);
        assert!((raw - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn transform_is_unit_norm() {
        let docs: Vec<Vec<usize>> = vec![vec![2, 3], vec![3, 4]];
        let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
        let v = TfidfVectorizer::fit(refs, 5).unwrap();
        let features = v.transform(&[2]);
        let norm: f64 = features.iter().map(|(_, w)| w * w).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transform_linear_in_counts_before_normalization() {
        let docs: Vec<Vec<usize>> = vec![vec![2, 3], vec![3, 4], vec![4, 5]];
        let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
        let v = TfidfVectorizer::fit(refs, 6) .unwrap();
        // doubling every count leaves the normalized vector unchanged
        let single = v.transform(&[2, 4]);
        let doubled = v.transform(&[2, 4, 2, 4]);
        assert_eq!(single.len(), doubled.len());
        for ((i, a), (j, b)) in single.iter().zip(&doubled) {
            assert_eq!(i, j);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unseen_terms_are_ignored() {
        let docs: Vec<Vec<usize>> = vec![vec![2], vec![2, 3]];
        let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
        let v = TfidfVectorizer::fit(refs, 10).unwrap();
        let features = v.transform(&[3, 7, 9, UNK_INDEX, PAD_INDEX]);
        assert!(features.iter().all(|&(i, _)| i == 3));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let refs: Vec<&[usize]> = Vec::new();
        assert!(TfidfVectorizer::fit(refs, 4).is_err());
    }

    fn separable_features(n_per_class: usize) -> (Vec<SparseVector>, Vec<usize>) {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3usize {
            for _ in 0..n_per_class {
                features.push(vec![(c, 1.0)]);
                labels.push(c);
            }
        }
        (features, labels)
    }

    #[test]
    fn separable_features_reach_perfect_accuracy() {
        let (features, labels) = separable_features(10);
        let model = train_linear_classifier(
            &features,
            &labels,
            3,
            None,
            3,
            &LinearConfig::default(),
        )
        .unwrap();
        let correct = features
            .iter()
            .zip(&labels)
            .filter(|(f, &y)| model.predict_label(f) == y)
            .count();
        assert_eq!(correct, features.len());
    }

    #[test]
    fn huge_ridge_drives_weights_to_zero_and_predictions_to_uniform() {
        let (features, labels) = separable_features(10);
        let cfg = LinearConfig {
            l2: 1e6,
            ..LinearConfig::default()
        };
        let model = train_linear_classifier(&features, &labels, 3, None, 3, &cfg).unwrap();
        for k in 0..3 {
            for f in 0..3 {
                assert!(model.weight(k, f).abs() < 1e-3);
            }
        }
        let probs = model.predict_probabilities(&features[0]);
        for p in probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn recovers_slope_two_on_exact_linear_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            features.push(vec![(0usize, x)]);
            targets.push(vec![2.0 * x]);
        }
        let cfg = LinearConfig {
            epochs: 400,
            learning_rate: 0.3,
            l2: 0.0,
            ..LinearConfig::default()
        };
        let model = train_linear_regressor(&features, &targets, 1, 1, &cfg).unwrap();
        assert!((model.weight(0, 0) - 2.0).abs() < 1e-3, "slope {}", model.weight(0, 0));
    }

    #[test]
    fn zero_weight_model_predicts_uniformly() {
        let model = LinearModel {
            weights: vec![vec![0.0; 4]; 3],
            bias: vec![0.0; 3],
            task: LinearTask::MultinomialLogistic,
        };
        let probs = model.predict_probabilities(&vec![(1, 0.7)]);
        for p in &probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probabilities_shift_invariant_argmax() {
        let model = LinearModel {
            weights: vec![vec![0.5, -0.3], vec![0.1, 0.9]],
            bias: vec![0.2, -0.1],
            task: LinearTask::MultinomialLogistic,
        };
        let shifted = LinearModel {
            weights: model.weights.clone(),
            bias: model.bias.iter().map(|b| b + 5.0).collect(),
            task: LinearTask::MultinomialLogistic,
        };
        let x = vec![(0usize, 0.4), (1usize, -0.8)];
        assert_eq!(model.predict_label(&x), shifted.predict_label(&x));
        let (a, b) = (
            model.predict_probabilities(&x),
            shifted.predict_probabilities(&x),
        );
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn external_predictions_parse_both_layouts() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "doc_id,predicted_label\n0,joy\n1,anger").unwrap();
        match load_external_predictions(f.path()).unwrap() {
            ExternalPredictions::Labels(rows) => {
                assert_eq!(rows, vec![("0".into(), "joy".into()), ("1".into(), "anger".into())]);
            }
            _ => panic!("expected label predictions"),
        }

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "doc_id,valence,arousal\n0,1.5,-0.25").unwrap();
        match load_external_predictions(f.path()).unwrap() {
            ExternalPredictions::Scores { dimensions, rows } => {
                assert_eq!(dimensions, vec!["valence", "arousal"]);
                assert_eq!(rows[0].1, vec![1.5, -0.25]);
            }
            _ => panic!("expected score predictions"),
        }
    }

    #[test]
    fn uniform_class_weights_match_unweighted_training() {
        let (features, labels) = separable_features(8);
        let w = class_weights(labels.iter().copied(), 3).unwrap();
        assert!(w.weights().iter().all(|&x| x == 1.0));
        let cfg = LinearConfig::default();
        let a = train_linear_classifier(&features, &labels, 3, None, 3, &cfg).unwrap();
        let b = train_linear_classifier(&features, &labels, 3, Some(&w), 3, &cfg).unwrap();
        for f in &features {
            assert_eq!(a.predict_label(f), b.predict_label(f));
        }
    }
}
