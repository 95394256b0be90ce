//! Train a BiLSTM emotion classifier on a synthetic marker corpus with
//! the full protocol: per-run 80/20 splits, early stopping on validation
//! loss, and metrics averaged over several independent seeded runs.
//!
//!     cargo run --example train_classifier

use affectnet::corpus::{synthesize_corpus, SyntheticSpec};
use affectnet::layers::{Direction, DropoutSpec};
use affectnet::training::{
    multirun, AdamConfig, EmbeddingSource, FineTuneScope, NetworkSpec, TaskCorpus, TrainConfig,
};

fn main() -> affectnet::Result<()> {
    let synth = synthesize_corpus(&SyntheticSpec::new(4, 20), 7)?;
    println!(
        "corpus: {} documents, {} classes, vocabulary {}",
        synth.corpus.len(),
        synth.corpus.num_classes(),
        synth.vocabulary.size()
    );

    let spec = NetworkSpec {
        embedding_dim: 16,
        hidden_size: 16,
        direction: Direction::Bidirectional,
        dropout: DropoutSpec {
            recurrent_rate: 0.2,
            output_rate: 0.2,
        },
        embedding_source: EmbeddingSource::Random,
    };
    let cfg = TrainConfig {
        epochs: 40,
        batch_size: 16,
        validation_fraction: 0.2,
        patience: 6,
        seed: 42,
        adam: AdamConfig {
            learning_rate: 0.02,
            ..AdamConfig::default()
        },
        weighted_loss: true,
        scope: FineTuneScope::Full,
    };

    let data = TaskCorpus::Classification(synth.corpus.clone());
    let (aggregate, _best) = multirun(
        &spec,
        &synth.vocabulary,
        &data,
        0.8,
        5,
        &cfg,
        &mut |run, epoch, train_loss, val_loss| {
            if epoch == 1 {
                println!("-- run {run}");
            }
            println!("epoch {epoch} train_loss {train_loss:.4} val_loss {val_loss:.4}");
        },
    )?;

    println!("\nmetrics averaged over {} runs:", aggregate.runs.len());
    for ((name, mean), std) in aggregate
        .metric_names
        .iter()
        .zip(&aggregate.means)
        .zip(&aggregate.std_devs)
    {
        println!("  {name:<22} {mean:.4} (std {std:.4})");
    }
    println!(
        "best run: {} (validation loss {:.4})",
        aggregate.best_run, aggregate.runs[aggregate.best_run].best_val_loss
    );
    Ok(())
}
