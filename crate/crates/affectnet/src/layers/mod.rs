//! Network building blocks: the embedding layer, LSTM cells and
//! uni/bidirectional sequence encoders with variational recurrent dropout,
//! and the softmax/affine prediction heads.

mod embedding;
mod head;
mod lstm;
mod network;

pub use embedding::{EmbeddingCoverage, EmbeddingLayer, EMBEDDING_INIT_BOUND};
pub use head::{AffineHead, Head, HeadNodes, SoftmaxHead};
pub use lstm::{lstm_step, GateNodes, GateParams, LstmNodes, LstmParams, LstmState};
pub use network::{
    argmax, AffectNetwork, Direction, DropoutSpec, Mode, NetworkConfig, NetworkNodes,
    SequenceMasks, TaskKind,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, Tensor};
    use crate::objective::{weighted_ce_node, ClassWeights};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Full-pipeline gradient check: embed -> BiLSTM -> softmax head ->
    /// weighted cross-entropy, dropout off. Parameters are redrawn from a
    /// wide uniform so every gradient coordinate sits well above the
    /// finite-difference noise floor.
    #[test]
    fn full_forward_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let config = NetworkConfig {
            vocab_size: 9,
            embedding_dim: 4,
            hidden_size: 3,
            direction: Direction::Bidirectional,
            task: TaskKind::Classification { classes: 3 },
            dropout: DropoutSpec::none(),
        };
        let mut net = AffectNetwork::new(config, &mut rng).unwrap();
        for p in net.parameters_mut() {
            let fresh: Vec<f64> = (0..p.value.len()).map(|_| rng.gen_range(-0.6..0.6)).collect();
            p.value.data_mut().copy_from_slice(&fresh);
        }
        let net = net;
        let weights = ClassWeights::uniform(3);
        let seq = vec![2usize, 7, 3, 2];
        let tensors: Vec<Tensor> = net.parameters().iter().map(|p| p.value.clone()).collect();

        let err = grad_check(
            |tape, nodes| {
                let nn = net.nodes_from_ordered(nodes);
                let out = net.output_on_tape(tape, &nn, &seq, &SequenceMasks::none())?;
                weighted_ce_node(tape, out, 1, &weights)
            },
            &tensors,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "rel err {err}");
    }

    /// The expected train-mode encoding under output dropout equals the
    /// eval encoding (inverted dropout is unbiased there); a smoke-sized
    /// version of the Monte-Carlo acceptance check.
    #[test]
    fn output_dropout_is_unbiased_in_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let config = NetworkConfig {
            vocab_size: 8,
            embedding_dim: 4,
            hidden_size: 3,
            direction: Direction::Unidirectional,
            task: TaskKind::Classification { classes: 2 },
            dropout: DropoutSpec {
                recurrent_rate: 0.0,
                output_rate: 0.5,
            },
        };
        let net = AffectNetwork::new(config, &mut rng).unwrap();
        let seq = vec![2usize, 5, 3];
        let reference = net.encode_seq(&seq, Mode::Eval, None).unwrap();

        let samples = 2000;
        let mut sums = vec![0.0; reference.len()];
        let mut sq_sums = vec![0.0; reference.len()];
        for _ in 0..samples {
            let enc = net.encode_seq(&seq, Mode::Train, Some(&mut rng)).unwrap();
            for (i, v) in enc.iter().enumerate() {
                sums[i] += v;
                sq_sums[i] += v * v;
            }
        }
        for i in 0..reference.len() {
            let mean = sums[i] / samples as f64;
            let var = (sq_sums[i] / samples as f64 - mean * mean).max(0.0);
            let se = (var / samples as f64).sqrt();
            let tolerance = 4.0 * se + 1e-12;
            assert!(
                (mean - reference[i]).abs() <= tolerance,
                "coordinate {i}: mean {mean} vs eval {} (se {se})",
                reference[i]
            );
        }
    }

    /// The recurrent mask is sampled once per sequence: repeating the same
    /// token must hit the same thinned units every step. With per-step
    /// resampling the two-step encoding of a constant sequence would not
    /// commute with swapping the (identical) inputs; here we check
    /// determinism given a fixed rng stream instead.
    #[test]
    fn train_mode_is_deterministic_under_a_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let config = NetworkConfig {
            vocab_size: 8,
            embedding_dim: 3,
            hidden_size: 4,
            direction: Direction::Bidirectional,
            task: TaskKind::Classification { classes: 2 },
            dropout: DropoutSpec::default(),
        };
        let net = AffectNetwork::new(config, &mut rng).unwrap();
        let seq = vec![2usize, 3, 4, 5, 6];

        let mut rng_a = ChaCha8Rng::seed_from_u64(99);
        let mut rng_b = ChaCha8Rng::seed_from_u64(99);
        let a = net.predict_with_mode(&seq, Mode::Train, Some(&mut rng_a)).unwrap();
        let b = net.predict_with_mode(&seq, Mode::Train, Some(&mut rng_b)).unwrap();
        assert_eq!(a, b);
        // and the rng state advanced identically
        assert_eq!(rng_a.gen::<u64>(), rng_b.gen::<u64>());
    }
}
