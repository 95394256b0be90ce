//! Dense tensors with a recorded computation tape for reverse-mode
//! gradients, plus a finite-difference gradient checker.
//!
//! A [`Tape`] records every primitive application eagerly; [`Tape::backward`]
//! runs one reverse sweep and returns the adjoint of every node the loss
//! reaches. [`Parameter`] pairs a value with a gradient accumulator that sums
//! contributions until an explicit reset, so shared parameters (such as an
//! embedding matrix touched at many timesteps) collect all of them.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::grad_check;
pub use tape::{sigmoid, Gradients, NodeId, Parameter, Tape, LOG_CLAMP};
pub use tensor::Tensor;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::new(rows, cols, data).unwrap()
    }

    type LossBuilder = Box<dyn Fn(&mut Tape, &[NodeId]) -> crate::error::Result<NodeId>>;

    /// Every primitive's adjoint against central differences: random small
    /// tensors, 100 trials, tolerance 1e-6 at h = 1e-5.
    #[test]
    fn primitive_adjoints_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let r = rng.gen_range(1..=5);
            let k = rng.gen_range(1..=5);
            let c = rng.gen_range(1..=5);
            let a = random_tensor(&mut rng, r, k);
            let b = random_tensor(&mut rng, k, c);
            let same = random_tensor(&mut rng, r, k);
            let row = rng.gen_range(0..r);

            let cases: Vec<(&str, LossBuilder)> = vec![
                ("matmul", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.matmul(n[0], n[1])?;
                    Ok(t.sum(m))
                })),
                ("add", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.add(n[0], n[2])?;
                    Ok(t.sum(m))
                })),
                ("sub", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.sub(n[0], n[2])?;
                    Ok(t.sum(m))
                })),
                ("hadamard", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.hadamard(n[0], n[2])?;
                    Ok(t.sum(m))
                })),
                ("sigmoid", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.sigmoid(n[0]);
                    Ok(t.sum(m))
                })),
                ("tanh", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.tanh(n[0]);
                    Ok(t.sum(m))
                })),
                ("concat", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.concat(n[0], n[2])?;
                    let sq = t.hadamard(m, m)?;
                    Ok(t.sum(sq))
                })),
                ("row_lookup", Box::new(move |t: &mut Tape, n: &[NodeId]| {
                    let m = t.row_lookup(n[0], row)?;
                    let sq = t.hadamard(m, m)?;
                    Ok(t.sum(sq))
                })),
                ("scale", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let m = t.scale(n[0], -2.5);
                    Ok(t.sum(m))
                })),
                ("mean", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let sq = t.hadamard(n[0], n[0])?;
                    Ok(t.mean(sq))
                })),
                ("softmax", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let p = t.softmax(n[0]);
                    let sq = t.hadamard(p, p)?;
                    Ok(t.sum(sq))
                })),
                ("neg_log_pick", Box::new(|t: &mut Tape, n: &[NodeId]| {
                    let p = t.softmax(n[0]);
                    let first = t.row_lookup(p, 0)?;
                    t.neg_log_pick(first, 0, 1.7)
                })),
            ];
            for (name, f) in cases {
                let err = grad_check(f.as_ref(), &[a.clone(), b.clone(), same.clone()], 1e-5)
                    .unwrap_or_else(|e| panic!("{name} failed: {e}"));
                assert!(err < 1e-6, "trial {trial}: {name} rel err {err}");
            }
        }
    }

    /// Identical inputs produce bit-identical forward values and gradients.
    #[test]
    fn tape_replay_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_tensor(&mut rng, 3, 3);
        let x = random_tensor(&mut rng, 3, 2);
        let run = || {
            let mut tape = Tape::new();
            let wn = tape.leaf(w.clone());
            let xn = tape.leaf(x.clone());
            let h = tape.matmul(wn, xn).unwrap();
            let s = tape.tanh(h);
            let loss = tape.mean(s);
            let grads = tape.backward(loss).unwrap();
            (
                tape.value(loss).item(),
                grads.get(wn).unwrap().data().to_vec(),
            )
        };
        let (v1, g1) = run();
        let (v2, g2) = run();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert_eq!(g1, g2);
    }
}
