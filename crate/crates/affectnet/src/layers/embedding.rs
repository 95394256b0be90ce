use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Vocabulary, PAD_INDEX, UNK_INDEX};
use crate::error::{Error, Result};
use crate::numerics::{NodeId, Parameter, Tape, Tensor};

/// Bound for random embedding initialization (also used for
/// out-of-vocabulary rows when loading pretrained vectors).
pub const EMBEDDING_INIT_BOUND: f64 = 0.05;

/// V x D lookup table mapping vocabulary indices to dense vectors. The
/// padding row (index 0) is all-zero and never updated.
#[derive(Debug, Clone)]
pub struct EmbeddingLayer {
    pub weights: Parameter,
    pub trainable: bool,
}

/// How much of the vocabulary a pretrained embedding file covered.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingCoverage {
    /// Vocabulary tokens found in the file.
    pub matched: usize,
    /// Non-reserved vocabulary size.
    pub vocabulary: usize,
    pub dimension: usize,
}

impl EmbeddingCoverage {
    /// Fraction of the (non-reserved) vocabulary matched.
    pub fn fraction(&self) -> f64 {
        if self.vocabulary == 0 {
            0.0
        } else {
            self.matched as f64 / self.vocabulary as f64
        }
    }
}

impl EmbeddingLayer {
    /// Random initialization from uniform(-0.05, 0.05), pad row zero.
    pub fn random(vocab_size: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut matrix = Tensor::zeros(vocab_size, dim);
        for row in 1..vocab_size {
            for col in 0..dim {
                matrix.set(
                    row,
                    col,
                    rng.gen_range(-EMBEDDING_INIT_BOUND..EMBEDDING_INIT_BOUND),
                );
            }
        }
        Self {
            weights: Parameter::new("embedding", matrix),
            trainable: true,
        }
    }

    /// Loads embeddings in the word-vector text format: one entry per
    /// line, a token followed by D decimal numbers, space separated, no
    /// header. In-vocabulary tokens take their file vectors; other
    /// vocabulary rows are initialized from uniform(-0.05, 0.05) under
    /// `rng`; the pad row stays zero.
    pub fn from_pretrained(
        path: &Path,
        vocab: &Vocabulary,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Self, EmbeddingCoverage)> {
        let content = std::fs::read_to_string(path)?;
        let mut dim: Option<usize> = None;
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; vocab.size()];
        let mut matched = 0usize;

        for (line_no, line) in content.lines().enumerate() {
            let line_no = line_no + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().ok_or(Error::Parse {
                line: line_no,
                message: "empty line".into(),
            })?;
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("'{f}' is not a number"),
                    })
                })
                .collect::<Result<_>>()?;
            match dim {
                None => {
                    if values.is_empty() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "entry has no vector values".into(),
                        });
                    }
                    dim = Some(values.len());
                }
                Some(d) if d != values.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {d} values, found {}", values.len()),
                    });
                }
                _ => {}
            }
            if let Some(index) = vocab.index_of(token) {
                if index != PAD_INDEX && index != UNK_INDEX {
                    if rows[index].is_none() {
                        matched += 1;
                    }
                    rows[index] = Some(values);
                }
            }
        }

        let dim = dim.ok_or_else(|| Error::Parse {
            line: 0,
            message: "embedding file has no entries".into(),
        })?;

        let coverage = EmbeddingCoverage {
            matched,
            vocabulary: vocab.size().saturating_sub(2),
            dimension: dim,
        };
        if matched == 0 {
            eprintln!(
                "warning: embedding file {} matched no vocabulary tokens",
                path.display()
            );
        }

        let mut matrix = Tensor::zeros(vocab.size(), dim);
        for (row, entry) in rows.iter().enumerate().skip(1) {
            match entry {
                Some(values) => {
                    for (col, &v) in values.iter().enumerate() {
                        matrix.set(row, col, v);
                    }
                }
                None => {
                    for col in 0..dim {
                        matrix.set(
                            row,
                            col,
                            rng.gen_range(-EMBEDDING_INIT_BOUND..EMBEDDING_INIT_BOUND),
                        );
                    }
                }
            }
        }
        Ok((
            Self {
                weights: Parameter::new("embedding", matrix),
                trainable: true,
            },
            coverage,
        ))
    }

    pub fn from_matrix(matrix: Tensor, trainable: bool) -> Self {
        Self {
            weights: Parameter::new("embedding", matrix),
            trainable,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.weights.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.value.cols()
    }

    pub fn bind(&self, tape: &mut Tape) -> NodeId {
        tape.bind(&self.weights)
    }

    /// Looks up each index as a 1xD row node. Indices must be below the
    /// vocabulary size.
    pub fn embed(tape: &mut Tape, matrix: NodeId, sequence: &[usize]) -> Result<Vec<NodeId>> {
        sequence
            .iter()
            .map(|&idx| tape.row_lookup(matrix, idx))
            .collect()
    }
}
