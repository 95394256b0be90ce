use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numerics::{NodeId, Parameter, Tape, Tensor};

const HEAD_INIT_BOUND: f64 = 0.1;

fn uniform_weight(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-HEAD_INIT_BOUND..HEAD_INIT_BOUND))
        .collect();
    Tensor::new(rows, cols, data).expect("finite init")
}

/// Dense layer with softmax activation: logits x.W + b squashed to a
/// probability row that sums to one.
#[derive(Debug, Clone)]
pub struct SoftmaxHead {
    pub weight: Parameter,
    pub bias: Parameter,
}

impl SoftmaxHead {
    pub fn new(input_dim: usize, classes: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            weight: Parameter::new("head.weight", uniform_weight(input_dim, classes, rng)),
            bias: Parameter::new("head.bias", Tensor::zeros(1, classes)),
        }
    }
}

/// Dense layer implementing an affine transformation x.W + b: one output
/// score per affective dimension.
#[derive(Debug, Clone)]
pub struct AffineHead {
    pub weight: Parameter,
    pub bias: Parameter,
}

impl AffineHead {
    pub fn new(input_dim: usize, dimensions: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            weight: Parameter::new("head.weight", uniform_weight(input_dim, dimensions, rng)),
            bias: Parameter::new("head.bias", Tensor::zeros(1, dimensions)),
        }
    }
}

/// The prediction layer: softmax for categorical emotions, affine for
/// intensity scores.
#[derive(Debug, Clone)]
pub enum Head {
    Softmax(SoftmaxHead),
    Affine(AffineHead),
}

impl Head {
    pub fn weight(&self) -> &Parameter {
        match self {
            Head::Softmax(h) => &h.weight,
            Head::Affine(h) => &h.weight,
        }
    }

    pub fn bias(&self) -> &Parameter {
        match self {
            Head::Softmax(h) => &h.bias,
            Head::Affine(h) => &h.bias,
        }
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        vec![self.weight(), self.bias()]
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        match self {
            Head::Softmax(h) => vec![&mut h.weight, &mut h.bias],
            Head::Affine(h) => vec![&mut h.weight, &mut h.bias],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight().value.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight().value.cols()
    }

    pub fn bind(&self, tape: &mut Tape) -> HeadNodes {
        HeadNodes {
            weight: tape.bind(self.weight()),
            bias: tape.bind(self.bias()),
            softmax: matches!(self, Head::Softmax(_)),
        }
    }
}

/// Tape handles for the head parameters.
#[derive(Debug, Clone, Copy)]
pub struct HeadNodes {
    pub weight: NodeId,
    pub bias: NodeId,
    pub(crate) softmax: bool,
}

impl HeadNodes {
    /// Raw affine output x.W + b.
    pub fn logits(&self, tape: &mut Tape, encoding: NodeId) -> Result<NodeId> {
        let projected = tape.matmul(encoding, self.weight)?;
        tape.add(projected, self.bias)
    }

    /// Probability row (softmax head) or score row (affine head).
    pub fn output(&self, tape: &mut Tape, encoding: NodeId) -> Result<NodeId> {
        let logits = self.logits(tape, encoding)?;
        Ok(if self.softmax {
            tape.softmax(logits)
        } else {
            logits
        })
    }
}
