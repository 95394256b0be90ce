use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Probabilities below this are clamped before a log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Concat(NodeId, NodeId),
    RowLookup(NodeId, usize),
    Scale(NodeId, f64),
    Sum(NodeId),
    Mean(NodeId),
    Softmax(NodeId),
    NegLogPick {
        input: NodeId,
        index: usize,
        weight: f64,
        clamped: bool,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Recorded computation graph. Nodes are appended in evaluation order, so
/// every node's inputs precede it and one reverse sweep visits each node
/// exactly once.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    clamp_events: usize,
}

/// Adjoints produced by [`Tape::backward`]. Nodes the loss does not reach
/// have no entry and read as zero.
#[derive(Debug)]
pub struct Gradients {
    adjoints: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.adjoints[id.0].as_ref()
    }
}

/// Trainable value with a gradient accumulator of identical shape.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub value: Tensor,
    grad: Tensor,
    name: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.rows(), value.cols());
        Self {
            value,
            grad,
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grad(&self) -> &Tensor {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut Tensor {
        &mut self.grad
    }

    pub fn reset_grad(&mut self) {
        self.grad.fill(0.0);
    }

    /// Adds this parameter's adjoint from a backward pass, if any.
    /// Contributions sum across repeated calls until `reset_grad`.
    pub fn accumulate(&mut self, grads: &Gradients, id: NodeId) {
        if let Some(g) = grads.get(id) {
            self.grad.add_assign(g);
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of times a probability had to be clamped before a log.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Records an input node (constant or parameter value).
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// Records a parameter's current value as an input node.
    pub fn bind(&mut self, param: &Parameter) -> NodeId {
        self.leaf(param.value.clone())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    fn elementwise_pair(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(Error::ShapeMismatch {
                op,
                lhs: ta.shape_vec(),
                rhs: tb.shape_vec(),
            });
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(Tensor::from_raw(ta.rows(), ta.cols(), data))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.elementwise_pair("add", a, b, |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.elementwise_pair("sub", a, b, |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.elementwise_pair("hadamard", a, b, |x, y| x * y)?;
        Ok(self.push(Op::Hadamard(a, b), value))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(sigmoid);
        self.push(Op::Sigmoid(x), value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(f64::tanh);
        self.push(Op::Tanh(x), value)
    }

    /// Concatenation along the last axis; row counts must agree.
    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rows() != tb.rows() {
            return Err(Error::ShapeMismatch {
                op: "concat",
                lhs: ta.shape_vec(),
                rhs: tb.shape_vec(),
            });
        }
        let (rows, ca, cb) = (ta.rows(), ta.cols(), tb.cols());
        let mut data = Vec::with_capacity(rows * (ca + cb));
        for r in 0..rows {
            data.extend_from_slice(ta.row(r));
            data.extend_from_slice(tb.row(r));
        }
        let value = Tensor::from_raw(rows, ca + cb, data);
        Ok(self.push(Op::Concat(a, b), value))
    }

    /// Single row of a matrix as a 1xC tensor.
    pub fn row_lookup(&mut self, m: NodeId, row: usize) -> Result<NodeId> {
        let t = self.value(m);
        if row >= t.rows() {
            return Err(Error::IndexOutOfRange {
                index: row,
                size: t.rows(),
            });
        }
        let value = Tensor::row_vector(t.row(row));
        Ok(self.push(Op::RowLookup(m, row), value))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.value(x).map(|v| v * c);
        self.push(Op::Scale(x, c), value)
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        self.push(Op::Sum(x), value)
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let t = self.value(x);
        let value = Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64);
        self.push(Op::Mean(x), value)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let t = self.value(x);
        let mut data = Vec::with_capacity(t.len());
        for r in 0..t.rows() {
            let row = t.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            data.extend(exps.iter().map(|e| e / total));
        }
        let value = Tensor::from_raw(t.rows(), t.cols(), data);
        self.push(Op::Softmax(x), value)
    }

    /// `weight * (-ln p[index])` over a 1xK probability row, with the
    /// probability clamped at [`LOG_CLAMP`] before the log.
    pub fn neg_log_pick(&mut self, p: NodeId, index: usize, weight: f64) -> Result<NodeId> {
        let t = self.value(p);
        if t.rows() != 1 || index >= t.cols() {
            return Err(Error::IndexOutOfRange {
                index,
                size: t.cols(),
            });
        }
        let raw = t.get(0, index);
        let clamped = raw < LOG_CLAMP;
        if clamped {
            self.clamp_events += 1;
        }
        let value = Tensor::scalar(-weight * raw.max(LOG_CLAMP).ln());
        Ok(self.push(
            Op::NegLogPick {
                input: p,
                index,
                weight,
                clamped,
            },
            value,
        ))
    }

    /// Reverse sweep from a scalar loss node. Returns the adjoint of every
    /// node the loss reaches; repeated calls on the same tape are
    /// independent.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidArgument("backward on an empty tape".into()));
        }
        if self.value(loss).len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.value(loss).shape_vec()
            )));
        }
        let mut adjoints: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        adjoints[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let Some(grad) = adjoints[id].take() else {
                continue;
            };
            self.propagate(id, &grad, &mut adjoints);
            adjoints[id] = Some(grad);
        }
        Ok(Gradients { adjoints })
    }

    fn accumulate(adjoints: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        match &mut adjoints[id.0] {
            Some(existing) => existing.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&self, id: usize, grad: &Tensor, adjoints: &mut [Option<Tensor>]) {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let da = grad.matmul(&self.value(*b).transpose()).expect("shape");
                let db = self.value(*a).transpose().matmul(grad).expect("shape");
                Self::accumulate(adjoints, *a, da);
                Self::accumulate(adjoints, *b, db);
            }
            Op::Add(a, b) => {
                Self::accumulate(adjoints, *a, grad.clone());
                Self::accumulate(adjoints, *b, grad.clone());
            }
            Op::Sub(a, b) => {
                Self::accumulate(adjoints, *a, grad.clone());
                Self::accumulate(adjoints, *b, grad.map(|v| -v));
            }
            Op::Hadamard(a, b) => {
                let mut da = grad.clone();
                for (g, &v) in da.data_mut().iter_mut().zip(self.value(*b).data()) {
                    *g *= v;
                }
                let mut db = grad.clone();
                for (g, &v) in db.data_mut().iter_mut().zip(self.value(*a).data()) {
                    *g *= v;
                }
                Self::accumulate(adjoints, *a, da);
                Self::accumulate(adjoints, *b, db);
            }
            Op::Sigmoid(x) => {
                let y = &self.nodes[id].value;
                let mut dx = grad.clone();
                for (g, &s) in dx.data_mut().iter_mut().zip(y.data()) {
                    *g *= s * (1.0 - s);
                }
                Self::accumulate(adjoints, *x, dx);
            }
            Op::Tanh(x) => {
                let y = &self.nodes[id].value;
                let mut dx = grad.clone();
                for (g, &t) in dx.data_mut().iter_mut().zip(y.data()) {
                    *g *= 1.0 - t * t;
                }
                Self::accumulate(adjoints, *x, dx);
            }
            Op::Concat(a, b) => {
                let (ca, cb) = (self.value(*a).cols(), self.value(*b).cols());
                let rows = grad.rows();
                let mut da = Tensor::zeros(rows, ca);
                let mut db = Tensor::zeros(rows, cb);
                for r in 0..rows {
                    let row = grad.row(r);
                    da.data_mut()[r * ca..(r + 1) * ca].copy_from_slice(&row[..ca]);
                    db.data_mut()[r * cb..(r + 1) * cb].copy_from_slice(&row[ca..]);
                }
                Self::accumulate(adjoints, *a, da);
                Self::accumulate(adjoints, *b, db);
            }
            Op::RowLookup(m, row) => {
                let t = self.value(*m);
                let mut dm = Tensor::zeros(t.rows(), t.cols());
                dm.data_mut()[row * t.cols()..(row + 1) * t.cols()].copy_from_slice(grad.data());
                Self::accumulate(adjoints, *m, dm);
            }
            Op::Scale(x, c) => {
                Self::accumulate(adjoints, *x, grad.map(|v| v * c));
            }
            Op::Sum(x) => {
                let t = self.value(*x);
                Self::accumulate(adjoints, *x, Tensor::filled(t.rows(), t.cols(), grad.item()));
            }
            Op::Mean(x) => {
                let t = self.value(*x);
                let g = grad.item() / t.len() as f64;
                Self::accumulate(adjoints, *x, Tensor::filled(t.rows(), t.cols(), g));
            }
            Op::Softmax(x) => {
                // Per row: dx = p .* (g - <g, p>)
                let p = &self.nodes[id].value;
                let mut dx = Tensor::zeros(p.rows(), p.cols());
                for r in 0..p.rows() {
                    let (prow, grow) = (p.row(r), grad.row(r));
                    let dot: f64 = prow.iter().zip(grow).map(|(&a, &b)| a * b).sum();
                    for c in 0..p.cols() {
                        dx.set(r, c, prow[c] * (grow[c] - dot));
                    }
                }
                Self::accumulate(adjoints, *x, dx);
            }
            Op::NegLogPick {
                input,
                index,
                weight,
                clamped,
            } => {
                let t = self.value(*input);
                let mut dp = Tensor::zeros(1, t.cols());
                // In the clamped region the forward value is constant.
                if !clamped {
                    dp.set(0, *index, -weight / t.get(0, *index) * grad.item());
                }
                Self::accumulate(adjoints, *input, dp);
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_tanh_centers() {
        let mut tape = Tape::new();
        let zero = tape.leaf(Tensor::scalar(0.0));
        let s = tape.sigmoid(zero);
        let t = tape.tanh(zero);
        assert_eq!(tape.value(s).item(), 0.5);
        assert_eq!(tape.value(t).item(), 0.0);
    }

    #[test]
    fn sigmoid_of_ln3() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3f64.ln()));
        let s = tape.sigmoid(x);
        assert!((tape.value(s).item() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn linear_loss_gradient_rows_equal_input() {
        // loss = sum(W x) with x fixed: dW has every row equal to x^T.
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::new(2, 3, vec![0.5, -1.0, 2.0, 0.1, 0.2, 0.3]).unwrap());
        let x = tape.leaf(Tensor::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap());
        let y = tape.matmul(w, x).unwrap();
        let loss = tape.sum(y);
        let grads = tape.backward(loss).unwrap();
        let dw = grads.get(w).unwrap();
        assert_eq!(dw.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(dw.row(1), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn unused_leaf_gets_no_gradient() {
        let mut tape = Tape::new();
        let used = tape.leaf(Tensor::scalar(2.0));
        let unused = tape.leaf(Tensor::scalar(7.0));
        let loss = tape.hadamard(used, used).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert!(grads.get(unused).is_none());
        assert_eq!(grads.get(used).unwrap().item(), 4.0);
    }

    #[test]
    fn sigmoid_chain_quarter_slope_at_zero() {
        // loss = sigmoid(w.x) at w.x = 0 has gradient 0.25 * x.
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::new(1, 2, vec![0.0, 0.0]).unwrap());
        let x = tape.leaf(Tensor::new(2, 1, vec![3.0, -1.0]).unwrap());
        let z = tape.matmul(w, x).unwrap();
        let s = tape.sigmoid(z);
        let grads = tape.backward(s).unwrap();
        let dw = grads.get(w).unwrap();
        assert!((dw.get(0, 0) - 0.75).abs() < 1e-15);
        assert!((dw.get(0, 1) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut tape = Tape::new();
        let v = tape.leaf(Tensor::row_vector(&[1.0, 2.0]));
        assert!(tape.backward(v).is_err());
    }

    #[test]
    fn repeated_parameter_accumulates() {
        let mut tape = Tape::new();
        let mut p = Parameter::new("w", Tensor::scalar(3.0));
        let node = tape.bind(&p);
        let sq = tape.hadamard(node, node).unwrap();
        let grads = tape.backward(sq).unwrap();
        p.accumulate(&grads, node);
        p.accumulate(&grads, node);
        assert_eq!(p.grad().item(), 12.0);
        p.reset_grad();
        assert_eq!(p.grad().item(), 0.0);
    }

    #[test]
    fn concat_adjoint_splits_exactly() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::row_vector(&[1.0, 2.0]));
        let b = tape.leaf(Tensor::row_vector(&[3.0, 4.0, 5.0]));
        let cat = tape.concat(a, b).unwrap();
        let w = tape.leaf(Tensor::row_vector(&[1.0, 2.0, 3.0, 4.0, 5.0]));
        let prod = tape.hadamard(cat, w).unwrap();
        let loss = tape.sum(prod);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(a).unwrap().data(), &[1.0, 2.0]);
        assert_eq!(grads.get(b).unwrap().data(), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(2, 3, vec![1.0, 2.0, 3.0, -5.0, 0.0, 5.0]).unwrap());
        let p = tape.softmax(x);
        for r in 0..2 {
            let s: f64 = tape.value(p).row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_of_log_counts() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::row_vector(&[1f64.ln(), 2f64.ln(), 3f64.ln()]));
        let p = tape.softmax(x);
        let got = tape.value(p).data();
        for (g, want) in got.iter().zip([1.0 / 6.0, 1.0 / 3.0, 0.5]) {
            assert!((g - want).abs() < 1e-12);
        }
    }

    #[test]
    fn neg_log_pick_clamps_and_counts() {
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::row_vector(&[0.0, 1.0]));
        let loss = tape.neg_log_pick(p, 0, 1.0).unwrap();
        assert_eq!(tape.clamp_events(), 1);
        assert!((tape.value(loss).item() - (-LOG_CLAMP.ln())).abs() < 1e-9);
        // Clamped region is flat.
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(p).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn row_lookup_out_of_range() {
        let mut tape = Tape::new();
        let m = tape.leaf(Tensor::zeros(2, 3));
        assert!(tape.row_lookup(m, 2).is_err());
    }
}
