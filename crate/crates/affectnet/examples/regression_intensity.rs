//! Dimensional affect as regression: an affine prediction head outputs
//! one intensity score per dimension and trains against mean squared
//! error. The synthetic corpus ties each document's valence to how many
//! positive versus negative tokens it contains.
//!
//!     cargo run --example regression_intensity

use affectnet::corpus::{ScoredCorpus, Vocabulary};
use affectnet::layers::{Direction, DropoutSpec};
use affectnet::training::{
    train, AdamConfig, EmbeddingSource, FineTuneScope, NetworkSpec, TaskCorpus, TaskReport,
    TrainConfig,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> affectnet::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let positive = ["bright", "warm", "kind", "sweet"];
    let negative = ["dark", "cold", "harsh", "bitter"];
    let filler = ["the", "a", "thing", "one", "it"];

    let mut docs: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for _ in 0..160 {
        let len = 8;
        let mut tokens = Vec::with_capacity(len);
        let mut balance = 0i32;
        for _ in 0..len {
            match rng.gen_range(0..3) {
                0 => {
                    tokens.push(positive[rng.gen_range(0..positive.len())].to_string());
                    balance += 1;
                }
                1 => {
                    tokens.push(negative[rng.gen_range(0..negative.len())].to_string());
                    balance -= 1;
                }
                _ => tokens.push(filler[rng.gen_range(0..filler.len())].to_string()),
            }
        }
        // valence in [-1, 1]: the sign balance of affective tokens
        let valence = balance as f64 / len as f64;
        docs.push((tokens, vec![valence]));
    }

    let lists: Vec<Vec<String>> = docs.iter().map(|(t, _)| t.clone()).collect();
    let vocab = Vocabulary::build(&lists, 1, usize::MAX)?;
    let encoded = docs
        .iter()
        .map(|(tokens, scores)| (vocab.encode(tokens), scores.clone()))
        .collect();
    let corpus = ScoredCorpus::new(encoded, vec!["valence".into()], vec![(-1.0, 1.0)])?;
    let data = TaskCorpus::Regression(corpus);
    let (train_part, test_part) = data.split(0.8, 1)?;

    let spec = NetworkSpec {
        embedding_dim: 10,
        hidden_size: 10,
        direction: Direction::Bidirectional,
        dropout: DropoutSpec {
            recurrent_rate: 0.1,
            output_rate: 0.1,
        },
        embedding_source: EmbeddingSource::Random,
    };
    let mut net = spec.build(&vocab, data.task_kind(), &mut rng)?;
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 16,
        validation_fraction: 0.15,
        patience: 10,
        seed: 5,
        adam: AdamConfig {
            learning_rate: 0.01,
            ..AdamConfig::default()
        },
        weighted_loss: false,
        scope: FineTuneScope::Full,
    };
    let result = train(&mut net, &train_part, Some(&test_part), &cfg, &mut |e, t, v| {
        if e % 10 == 0 {
            println!("epoch {e} train_loss {t:.4} val_loss {v:.4}");
        }
    })?;

    if let Some(TaskReport::Regression(report)) = result.metrics {
        println!(
            "\ntest MSE {:.4} over {} documents (variance of targets would be the\nscore of a constant-mean predictor)",
            report.mean_mse, report.total
        );
    }
    let probe = vocab.encode(&["bright", "warm", "sweet", "kind", "it", "the", "one", "a"]);
    println!("all-positive probe predicts valence {:?}", net.predict(&probe)?);
    let probe = vocab.encode(&["dark", "cold", "harsh", "bitter", "it", "the", "one", "a"]);
    println!("all-negative probe predicts valence {:?}", net.predict(&probe)?);
    Ok(())
}
