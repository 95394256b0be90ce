//! Load pretrained word vectors in the standard text format (token
//! followed by space-separated decimals, one entry per line), with
//! out-of-vocabulary rows seeded randomly and coverage statistics.
//!
//!     cargo run --example pretrained_embeddings

use std::io::Write;

use affectnet::corpus::Vocabulary;
use affectnet::layers::EmbeddingLayer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> affectnet::Result<()> {
    let docs = vec![vec![
        "joy".to_string(),
        "fear".to_string(),
        "anger".to_string(),
        "calm".to_string(),
    ]];
    let vocab = Vocabulary::build(&docs, 1, usize::MAX)?;

    // A miniature vectors file covering part of the vocabulary.
    let mut file = tempfile::NamedTempFile::new()?;
    writeln!(file, "joy 0.90 0.10 0.00")?;
    writeln!(file, "fear -0.80 0.30 0.05")?;
    writeln!(file, "unrelatedword 0.00 0.00 1.00")?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (layer, coverage) = EmbeddingLayer::from_pretrained(file.path(), &vocab, &mut rng)?;
    println!(
        "coverage: {}/{} vocabulary tokens matched ({:.0}%), dimension {}",
        coverage.matched,
        coverage.vocabulary,
        coverage.fraction() * 100.0,
        coverage.dimension
    );

    for token in ["joy", "fear", "anger"] {
        let idx = vocab.index_of(token).unwrap();
        println!("{token:>6} -> {:?}", layer.weights.value.row(idx));
    }
    println!(
        "   pad -> {:?} (always zero, never updated)",
        layer.weights.value.row(affectnet::corpus::PAD_INDEX)
    );
    Ok(())
}
