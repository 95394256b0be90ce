//! Verify the tape's reverse-mode gradients against central finite
//! differences, from single primitives up to the full
//! embed -> BiLSTM -> softmax -> weighted-cross-entropy pipeline.
//!
//!     cargo run --example gradient_check

use affectnet::layers::{
    AffectNetwork, Direction, DropoutSpec, NetworkConfig, SequenceMasks, TaskKind,
};
use affectnet::numerics::{grad_check, Tensor};
use affectnet::objective::{weighted_ce_node, ClassWeights};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> affectnet::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // A single primitive: loss = sum(tanh(A) . B)
    let a = Tensor::new(3, 3, (0..9).map(|i| (i as f64 * i as f64 - 3.0) / 11.0).collect())?;
    let b = Tensor::new(3, 2, (0..6).map(|i| 0.3 * i as f64 - 0.7).collect())?;
    let err = grad_check(
        |tape, nodes| {
            let t = tape.tanh(nodes[0]);
            let prod = tape.matmul(t, nodes[1])?;
            Ok(tape.sum(prod))
        },
        &[a, b],
        1e-5,
    )?;
    println!("tanh-matmul chain: max relative error {err:.2e}");

    // The whole network, dropout off (gradient checking requires a
    // deterministic function).
    let config = NetworkConfig {
        vocab_size: 12,
        embedding_dim: 5,
        hidden_size: 4,
        direction: Direction::Bidirectional,
        task: TaskKind::Classification { classes: 3 },
        dropout: DropoutSpec::none(),
    };
    let mut net = AffectNetwork::new(config, &mut rng)?;
    // Wider weights than the training default make every gradient
    // coordinate large relative to finite-difference noise.
    for p in net.parameters_mut() {
        let fresh: Vec<f64> = (0..p.value.len()).map(|_| rng.gen_range(-0.6..0.6)).collect();
        p.value.data_mut().copy_from_slice(&fresh);
    }
    let net = net;

    let seq = vec![2usize, 7, 4, 9, 3];
    let weights = ClassWeights::uniform(3);
    let tensors: Vec<Tensor> = net.parameters().iter().map(|p| p.value.clone()).collect();
    let coords: usize = tensors.iter().map(Tensor::len).sum();
    let err = grad_check(
        |tape, nodes| {
            let nn = net.nodes_from_ordered(nodes);
            let probs = net.output_on_tape(tape, &nn, &seq, &SequenceMasks::none())?;
            weighted_ce_node(tape, probs, 1, &weights)
        },
        &tensors,
        1e-5,
    )?;
    println!("full BiLSTM pipeline ({coords} parameter coordinates): max relative error {err:.2e}");
    Ok(())
}
