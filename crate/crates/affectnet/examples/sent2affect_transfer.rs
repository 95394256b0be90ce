//! Cross-task transfer: pretrain on binary sentiment, replace the
//! prediction layer, fine-tune on the affect task, and compare against
//! training from random initialization under the same seeds.
//!
//!     cargo run --example sent2affect_transfer

use affectnet::corpus::{synthesize_transfer_pair, TransferPairSpec};
use affectnet::layers::{Direction, DropoutSpec};
use affectnet::training::{
    AdamConfig, EmbeddingSource, FineTuneScope, NetworkSpec, TaskCorpus, TrainConfig,
};
use affectnet::transfer::{compare_with_random_init, TransferPlan};

fn main() -> affectnet::Result<()> {
    let pair = synthesize_transfer_pair(&TransferPairSpec::default(), 2024)?;
    println!(
        "source: {} sentiment documents; target: {} affect documents; shared vocabulary {}",
        pair.source.len(),
        pair.target.len(),
        pair.vocabulary.size()
    );

    let target = TaskCorpus::Classification(pair.target.clone());
    let plan = TransferPlan {
        vocabulary: &pair.vocabulary,
        source: &pair.source,
        target: &target,
        network: NetworkSpec {
            embedding_dim: 12,
            hidden_size: 12,
            direction: Direction::Bidirectional,
            dropout: DropoutSpec::none(),
            embedding_source: EmbeddingSource::Random,
        },
        scope: FineTuneScope::Full,
    };
    let adam = AdamConfig {
        learning_rate: 0.02,
        ..AdamConfig::default()
    };
    let source_cfg = TrainConfig {
        epochs: 5,
        batch_size: 16,
        validation_fraction: 0.15,
        patience: 5,
        adam,
        ..TrainConfig::default()
    };
    let target_cfg = TrainConfig {
        epochs: 40,
        batch_size: 16,
        validation_fraction: 0.25,
        patience: 40,
        adam,
        ..TrainConfig::default()
    };

    let comparison = compare_with_random_init(&plan, &source_cfg, &target_cfg, 0.8, 500, 6)?;
    println!("\nepochs to 90% validation accuracy (lower is better):");
    println!("{:>6}  {:>11}  {:>11}", "seed", "transferred", "random init");
    for i in 0..comparison.seeds.len() {
        let fmt = |e: Option<usize>| e.map_or("never".to_string(), |v| v.to_string());
        println!(
            "{:>6}  {:>11}  {:>11}",
            comparison.seeds[i],
            fmt(comparison.transferred[i].epochs_to_val_accuracy(0.9)),
            fmt(comparison.scratch[i].epochs_to_val_accuracy(0.9)),
        );
    }
    println!(
        "\ntransferred initialization reached the threshold first on {}/{} seeds",
        comparison.transferred_wins(0.9),
        comparison.seeds.len()
    );
    Ok(())
}
