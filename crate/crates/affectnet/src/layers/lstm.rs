use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numerics::{NodeId, Parameter, Tape, Tensor};

const WEIGHT_INIT_BOUND: f64 = 0.1;

/// One gate: input weights (D x H), recurrent weights (H x H) and bias
/// (1 x H).
#[derive(Debug, Clone)]
pub struct GateParams {
    pub input: Parameter,
    pub recurrent: Parameter,
    pub bias: Parameter,
}

impl GateParams {
    fn new(name: &str, input_dim: usize, hidden: usize, bias_init: f64, rng: &mut ChaCha8Rng) -> Self {
        let uniform = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let data = (0..rows * cols)
                .map(|_| rng.gen_range(-WEIGHT_INIT_BOUND..WEIGHT_INIT_BOUND))
                .collect();
            Tensor::new(rows, cols, data).expect("finite init")
        };
        Self {
            input: Parameter::new(format!("{name}.input"), uniform(input_dim, hidden, rng)),
            recurrent: Parameter::new(format!("{name}.recurrent"), uniform(hidden, hidden, rng)),
            bias: Parameter::new(
                format!("{name}.bias"),
                Tensor::filled(1, hidden, bias_init),
            ),
        }
    }
}

/// Parameters of one LSTM direction: input, forget and output gates plus
/// the candidate transform. The forget-gate bias starts at 1.
#[derive(Debug, Clone)]
pub struct LstmParams {
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new(prefix: &str, input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            input_gate: GateParams::new(&format!("{prefix}.i"), input_dim, hidden, 0.0, rng),
            forget_gate: GateParams::new(&format!("{prefix}.f"), input_dim, hidden, 1.0, rng),
            output_gate: GateParams::new(&format!("{prefix}.o"), input_dim, hidden, 0.0, rng),
            candidate: GateParams::new(&format!("{prefix}.g"), input_dim, hidden, 0.0, rng),
            input_dim,
            hidden,
        }
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        [
            &self.input_gate,
            &self.forget_gate,
            &self.output_gate,
            &self.candidate,
        ]
        .into_iter()
        .flat_map(|g| [&g.input, &g.recurrent, &g.bias])
        .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.candidate,
        ]
        .into_iter()
        .flat_map(|g| [&mut g.input, &mut g.recurrent, &mut g.bias])
        .collect()
    }

    pub fn bind(&self, tape: &mut Tape) -> LstmNodes {
        let gate = |g: &GateParams, tape: &mut Tape| GateNodes {
            input: tape.bind(&g.input),
            recurrent: tape.bind(&g.recurrent),
            bias: tape.bind(&g.bias),
        };
        LstmNodes {
            input_gate: gate(&self.input_gate, tape),
            forget_gate: gate(&self.forget_gate, tape),
            output_gate: gate(&self.output_gate, tape),
            candidate: gate(&self.candidate, tape),
            hidden: self.hidden,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GateNodes {
    pub input: NodeId,
    pub recurrent: NodeId,
    pub bias: NodeId,
}

/// Tape handles for one LSTM direction's parameters.
#[derive(Debug, Clone, Copy)]
pub struct LstmNodes {
    pub input_gate: GateNodes,
    pub forget_gate: GateNodes,
    pub output_gate: GateNodes,
    pub candidate: GateNodes,
    pub hidden: usize,
}

impl LstmNodes {
    /// Node ids in the same order as [`LstmParams::parameters`].
    pub fn ordered(&self) -> Vec<NodeId> {
        [
            self.input_gate,
            self.forget_gate,
            self.output_gate,
            self.candidate,
        ]
        .into_iter()
        .flat_map(|g| [g.input, g.recurrent, g.bias])
        .collect()
    }

    /// Fresh all-zero initial state.
    pub fn initial_state(&self, tape: &mut Tape) -> LstmState {
        LstmState {
            hidden: tape.leaf(Tensor::zeros(1, self.hidden)),
            cell: tape.leaf(Tensor::zeros(1, self.hidden)),
            step: 0,
        }
    }
}

/// Hidden and cell vectors after a number of steps.
#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub hidden: NodeId,
    pub cell: NodeId,
    pub step: usize,
}

/// One LSTM update. The previous hidden state (masked by the variational
/// recurrent-dropout mask when given; the same mask is reused at every
/// step of a sequence) feeds three sigmoid gates and a tanh candidate:
///
///   c' = f (*) c + i (*) g,  h' = o (*) tanh(c')
pub fn lstm_step(
    tape: &mut Tape,
    nodes: &LstmNodes,
    embedded: NodeId,
    state: &LstmState,
    recurrent_mask: Option<NodeId>,
) -> Result<LstmState> {
    let h_in = match recurrent_mask {
        Some(mask) => tape.hadamard(state.hidden, mask)?,
        None => state.hidden,
    };
    let preact = |tape: &mut Tape, gate: &GateNodes| -> Result<NodeId> {
        let from_input = tape.matmul(embedded, gate.input)?;
        let from_hidden = tape.matmul(h_in, gate.recurrent)?;
        let sum = tape.add(from_input, from_hidden)?;
        tape.add(sum, gate.bias)
    };

    let i_pre = preact(tape, &nodes.input_gate)?;
    let input_gate = tape.sigmoid(i_pre);
    let f_pre = preact(tape, &nodes.forget_gate)?;
    let forget_gate = tape.sigmoid(f_pre);
    let o_pre = preact(tape, &nodes.output_gate)?;
    let output_gate = tape.sigmoid(o_pre);
    let g_pre = preact(tape, &nodes.candidate)?;
    let candidate = tape.tanh(g_pre);

    let kept = tape.hadamard(forget_gate, state.cell)?;
    let written = tape.hadamard(input_gate, candidate)?;
    let cell = tape.add(kept, written)?;
    let cell_tanh = tape.tanh(cell);
    let hidden = tape.hadamard(output_gate, cell_tanh)?;

    Ok(LstmState {
        hidden,
        cell,
        step: state.step + 1,
    })
}
