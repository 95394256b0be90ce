//! Why the inverse-class-frequency loss matters: on a 9:1 corpus whose
//! minority evidence is ambiguous, the unweighted objective drifts toward
//! a majority vote while the weighted objective keeps recalling the
//! minority class.
//!
//!     cargo run --example weighted_loss_imbalance

use affectnet::corpus::{synthesize_imbalanced, ImbalancedSpec};
use affectnet::layers::{Direction, DropoutSpec};
use affectnet::objective::class_weights;
use affectnet::training::{
    train, AdamConfig, EmbeddingSource, FineTuneScope, NetworkSpec, TaskCorpus, TaskReport,
    TrainConfig,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> affectnet::Result<()> {
    let synth = synthesize_imbalanced(&ImbalancedSpec::default(), 11)?;
    let counts = synth.corpus.class_counts();
    let weights = class_weights(synth.corpus.labels(), 2)?;
    println!(
        "class counts {counts:?} -> loss weights {:?} (weights of all samples sum to N = {})",
        weights.weights(),
        synth.corpus.len()
    );

    let data = TaskCorpus::Classification(synth.corpus.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let split_seed = rng.gen::<u64>();
    let (train_part, test_part) = data.split(0.8, split_seed)?;

    let spec = NetworkSpec {
        embedding_dim: 12,
        hidden_size: 12,
        direction: Direction::Unidirectional,
        dropout: DropoutSpec {
            recurrent_rate: 0.2,
            output_rate: 0.2,
        },
        embedding_source: EmbeddingSource::Random,
    };
    for weighted in [true, false] {
        let mut net = spec.build(
            &synth.vocabulary,
            data.task_kind(),
            &mut ChaCha8Rng::seed_from_u64(8),
        )?;
        let cfg = TrainConfig {
            epochs: 40,
            batch_size: 16,
            validation_fraction: 0.15,
            patience: 40,
            seed: 33,
            adam: AdamConfig {
                learning_rate: 0.02,
                ..AdamConfig::default()
            },
            weighted_loss: weighted,
            scope: FineTuneScope::Full,
        };
        let result = train(&mut net, &train_part, Some(&test_part), &cfg, &mut |_, _, _| {})?;
        if let Some(TaskReport::Classification(report)) = result.metrics {
            println!(
                "{} loss: macro recall {:.3} (per class {:?}), weighted F1 {:.3}",
                if weighted { "weighted  " } else { "unweighted" },
                report.macro_recall(),
                report
                    .per_class
                    .iter()
                    .map(|c| (c.recall * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
                report.weighted_f1
            );
        }
    }
    Ok(())
}
