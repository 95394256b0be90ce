use rand::Rng;
use rand_chacha::ChaCha8Rng;

use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingLayer;
use super::head::{AffineHead, Head, HeadNodes, SoftmaxHead};
use super::lstm::{lstm_step, GateNodes, LstmNodes, LstmParams};
use crate::error::{Error, Result};
use crate::numerics::{Gradients, NodeId, Parameter, Tape, Tensor};

/// Whether dropout is active and masks are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Dropout rates: `recurrent_rate` thins the hidden state entering the
/// gates (one mask per sequence), `output_rate` thins the encoding fed to
/// the prediction layer. Inverted scaling keeps evaluation a pure
/// pass-through, so in eval mode both behave as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub recurrent_rate: f64,
    pub output_rate: f64,
}

impl DropoutSpec {
    pub fn none() -> Self {
        Self {
            recurrent_rate: 0.0,
            output_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("recurrent dropout", self.recurrent_rate),
            ("output dropout", self.output_rate),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::InvalidArgument(format!(
                    "{name} rate must lie in [0, 1), got {rate}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for DropoutSpec {
    fn default() -> Self {
        Self {
            recurrent_rate: 0.5,
            output_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Unidirectional,
    Bidirectional,
}

/// What the prediction layer produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification { classes: usize },
    Regression { dimensions: usize },
}

impl TaskKind {
    pub fn output_dim(&self) -> usize {
        match *self {
            TaskKind::Classification { classes } => classes,
            TaskKind::Regression { dimensions } => dimensions,
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self, TaskKind::Classification { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub direction: Direction,
    pub task: TaskKind,
    pub dropout: DropoutSpec,
}

impl NetworkConfig {
    pub fn encoding_dim(&self) -> usize {
        match self.direction {
            Direction::Unidirectional => self.hidden_size,
            Direction::Bidirectional => 2 * self.hidden_size,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::InvalidArgument(
                "vocabulary must include the reserved entries".into(),
            ));
        }
        if self.embedding_dim == 0 || self.hidden_size == 0 {
            return Err(Error::InvalidArgument(
                "embedding and hidden sizes must be positive".into(),
            ));
        }
        if self.task.output_dim() == 0 {
            return Err(Error::InvalidArgument("task needs at least one output".into()));
        }
        self.dropout.validate()
    }
}

/// Embedding layer, one or two LSTM directions, and a prediction head.
/// For the bidirectional variant the final hidden states of the two
/// passes are concatenated before the head.
#[derive(Debug, Clone)]
pub struct AffectNetwork {
    pub config: NetworkConfig,
    pub embedding: EmbeddingLayer,
    pub forward_lstm: LstmParams,
    pub backward_lstm: Option<LstmParams>,
    pub head: Head,
}

/// Tape handles for every parameter of a network, in the fixed order used
/// by [`AffectNetwork::parameters`].
#[derive(Debug, Clone)]
pub struct NetworkNodes {
    pub embedding: NodeId,
    pub forward: LstmNodes,
    pub backward: Option<LstmNodes>,
    pub head: HeadNodes,
    ordered: Vec<NodeId>,
}

impl NetworkNodes {
    pub fn ordered(&self) -> &[NodeId] {
        &self.ordered
    }
}

/// Per-sequence dropout masks; all absent in eval mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequenceMasks {
    pub forward_recurrent: Option<NodeId>,
    pub backward_recurrent: Option<NodeId>,
    pub output: Option<NodeId>,
}

impl SequenceMasks {
    pub fn none() -> Self {
        Self::default()
    }
}

fn fresh_head(task: TaskKind, input_dim: usize, rng: &mut ChaCha8Rng) -> Head {
    match task {
        TaskKind::Classification { classes } => {
            Head::Softmax(SoftmaxHead::new(input_dim, classes, rng))
        }
        TaskKind::Regression { dimensions } => {
            Head::Affine(AffineHead::new(input_dim, dimensions, rng))
        }
    }
}

impl AffectNetwork {
    /// Fresh network with a randomly initialized embedding table.
    pub fn new(config: NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let embedding = EmbeddingLayer::random(config.vocab_size, config.embedding_dim, rng);
        Self::assemble(config, embedding, rng)
    }

    /// Fresh network around an existing (e.g. pretrained) embedding layer.
    pub fn with_embedding(
        config: NetworkConfig,
        embedding: EmbeddingLayer,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        if embedding.vocab_size() != config.vocab_size || embedding.dim() != config.embedding_dim {
            return Err(Error::ShapeMismatch {
                op: "embedding",
                lhs: vec![config.vocab_size, config.embedding_dim],
                rhs: vec![embedding.vocab_size(), embedding.dim()],
            });
        }
        Self::assemble(config, embedding, rng)
    }

    fn assemble(config: NetworkConfig, embedding: EmbeddingLayer, rng: &mut ChaCha8Rng) -> Result<Self> {
        let forward_lstm = LstmParams::new("fwd", config.embedding_dim, config.hidden_size, rng);
        let backward_lstm = match config.direction {
            Direction::Unidirectional => None,
            Direction::Bidirectional => Some(LstmParams::new(
                "bwd",
                config.embedding_dim,
                config.hidden_size,
                rng,
            )),
        };
        let head = fresh_head(config.task, config.encoding_dim(), rng);
        Ok(Self {
            config,
            embedding,
            forward_lstm,
            backward_lstm,
            head,
        })
    }

    /// Replaces the prediction layer with a freshly initialized one for a
    /// new task, leaving every other parameter untouched.
    pub fn swap_head(&self, task: TaskKind, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut config = self.config.clone();
        config.task = task;
        config.validate()?;
        Ok(Self {
            config,
            embedding: self.embedding.clone(),
            forward_lstm: self.forward_lstm.clone(),
            backward_lstm: self.backward_lstm.clone(),
            head: fresh_head(task, self.config.encoding_dim(), rng),
        })
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut params = vec![&self.embedding.weights];
        params.extend(self.forward_lstm.parameters());
        if let Some(bwd) = &self.backward_lstm {
            params.extend(bwd.parameters());
        }
        params.extend(self.head.parameters());
        params
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut params = vec![&mut self.embedding.weights];
        params.extend(self.forward_lstm.parameters_mut());
        if let Some(bwd) = &mut self.backward_lstm {
            params.extend(bwd.parameters_mut());
        }
        params.extend(self.head.parameters_mut());
        params
    }

    /// Index range of the head parameters within [`Self::parameters`].
    pub fn head_param_range(&self) -> std::ops::Range<usize> {
        let total = self.parameters().len();
        total - 2..total
    }

    /// Binds every parameter onto the tape.
    pub fn bind(&self, tape: &mut Tape) -> NetworkNodes {
        let ordered: Vec<NodeId> = self.parameters().iter().map(|p| tape.bind(p)).collect();
        self.nodes_from_ordered(&ordered)
    }

    /// Reassembles the structured node handles from a flat list in
    /// [`Self::parameters`] order (as used by the gradient checker).
    pub fn nodes_from_ordered(&self, ordered: &[NodeId]) -> NetworkNodes {
        assert_eq!(
            ordered.len(),
            self.parameters().len(),
            "node list does not match parameter count"
        );
        let hidden = self.config.hidden_size;
        let lstm_nodes = |base: usize| {
            let gate = |offset: usize| GateNodes {
                input: ordered[base + offset],
                recurrent: ordered[base + offset + 1],
                bias: ordered[base + offset + 2],
            };
            LstmNodes {
                input_gate: gate(0),
                forget_gate: gate(3),
                output_gate: gate(6),
                candidate: gate(9),
                hidden,
            }
        };
        let forward = lstm_nodes(1);
        let backward = self.backward_lstm.as_ref().map(|_| lstm_nodes(13));
        let head_base = ordered.len() - 2;
        let head = HeadNodes {
            weight: ordered[head_base],
            bias: ordered[head_base + 1],
            softmax: self.config.task.is_classification(),
        };
        NetworkNodes {
            embedding: ordered[0],
            forward,
            backward,
            head,
            ordered: ordered.to_vec(),
        }
    }

    /// Samples the per-sequence dropout masks. Both rates behave as zero
    /// in eval mode.
    pub fn sample_masks(
        &self,
        tape: &mut Tape,
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<SequenceMasks> {
        if mode == Mode::Eval {
            return Ok(SequenceMasks::none());
        }
        let rng = rng.ok_or_else(|| {
            Error::InvalidArgument("train-mode forward pass needs a random generator".into())
        })?;
        let mask = |len: usize, rate: f64, tape: &mut Tape, rng: &mut ChaCha8Rng| {
            if rate == 0.0 {
                return None;
            }
            let scale = 1.0 / (1.0 - rate);
            let data: Vec<f64> = (0..len)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
                .collect();
            Some(tape.leaf(Tensor::row_vector(&data)))
        };
        let hidden = self.config.hidden_size;
        let forward_recurrent = mask(hidden, self.config.dropout.recurrent_rate, tape, rng);
        let backward_recurrent = if self.backward_lstm.is_some() {
            mask(hidden, self.config.dropout.recurrent_rate, tape, rng)
        } else {
            None
        };
        let output = mask(
            self.config.encoding_dim(),
            self.config.dropout.output_rate,
            tape,
            rng,
        );
        Ok(SequenceMasks {
            forward_recurrent,
            backward_recurrent,
            output,
        })
    }

    /// Runs the recurrent encoder over a non-empty sequence: the final
    /// hidden state of the left-to-right pass, concatenated with the final
    /// hidden state of the right-to-left pass for the bidirectional
    /// variant. Output dropout applies between this encoding and the head.
    pub fn encode_on_tape(
        &self,
        tape: &mut Tape,
        nodes: &NetworkNodes,
        sequence: &[usize],
        masks: &SequenceMasks,
    ) -> Result<NodeId> {
        if sequence.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot encode an empty sequence".into(),
            ));
        }
        let embedded = EmbeddingLayer::embed(tape, nodes.embedding, sequence)?;

        let run = |tape: &mut Tape,
                   lstm: &LstmNodes,
                   inputs: &[NodeId],
                   mask: Option<NodeId>|
         -> Result<NodeId> {
            let mut state = lstm.initial_state(tape);
            for &e in inputs {
                state = lstm_step(tape, lstm, e, &state, mask)?;
            }
            Ok(state.hidden)
        };

        let forward_final = run(tape, &nodes.forward, &embedded, masks.forward_recurrent)?;
        let mut encoding = match &nodes.backward {
            None => forward_final,
            Some(bwd) => {
                let reversed: Vec<NodeId> = embedded.iter().rev().copied().collect();
                let backward_final = run(tape, bwd, &reversed, masks.backward_recurrent)?;
                tape.concat(forward_final, backward_final)?
            }
        };
        if let Some(mask) = masks.output {
            encoding = tape.hadamard(encoding, mask)?;
        }
        Ok(encoding)
    }

    /// Encoder plus prediction layer: probability row for classification,
    /// score row for regression.
    pub fn output_on_tape(
        &self,
        tape: &mut Tape,
        nodes: &NetworkNodes,
        sequence: &[usize],
        masks: &SequenceMasks,
    ) -> Result<NodeId> {
        let encoding = self.encode_on_tape(tape, nodes, sequence, masks)?;
        nodes.head.output(tape, encoding)
    }

    /// Eval-mode prediction: deterministic, dropout disabled.
    pub fn predict(&self, sequence: &[usize]) -> Result<Vec<f64>> {
        self.predict_with_mode(sequence, Mode::Eval, None)
    }

    pub fn predict_with_mode(
        &self,
        sequence: &[usize],
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let nodes = self.bind(&mut tape);
        let masks = self.sample_masks(&mut tape, mode, rng)?;
        let out = self.output_on_tape(&mut tape, &nodes, sequence, &masks)?;
        Ok(tape.value(out).data().to_vec())
    }

    /// The encoding vector itself (before the head).
    pub fn encode_seq(
        &self,
        sequence: &[usize],
        mode: Mode,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let nodes = self.bind(&mut tape);
        let masks = self.sample_masks(&mut tape, mode, rng)?;
        let enc = self.encode_on_tape(&mut tape, &nodes, sequence, &masks)?;
        Ok(tape.value(enc).data().to_vec())
    }

    /// Adds a backward pass's adjoints into the parameter gradient
    /// accumulators. The embedding pad row never receives gradient, and a
    /// non-trainable embedding receives none at all.
    pub fn accumulate_gradients(&mut self, grads: &Gradients, nodes: &NetworkNodes) {
        let ordered = nodes.ordered.clone();
        for (param, node) in self.parameters_mut().into_iter().zip(&ordered) {
            param.accumulate(grads, *node);
        }
        let dim = self.embedding.dim();
        let grad = self.embedding.weights.grad_mut();
        if self.embedding.trainable {
            grad.data_mut()[..dim].fill(0.0);
        } else {
            grad.fill(0.0);
        }
    }

    pub fn reset_gradients(&mut self) {
        for p in self.parameters_mut() {
            p.reset_grad();
        }
    }
}

/// Index of the largest value; ties resolve to the first.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
