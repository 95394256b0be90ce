//! Persist a trained model to the archive format and restore it: the
//! round trip is bit-exact, so the reloaded model predicts identically.
//!
//!     cargo run --example save_load_predict

use affectnet::cli::{load_archive, save_archive, ArchiveMetadata};
use affectnet::corpus::{synthesize_corpus, PreprocessOptions, SyntheticSpec};
use affectnet::layers::{argmax, Direction, DropoutSpec};
use affectnet::training::{
    train, AdamConfig, EmbeddingSource, NetworkSpec, TaskCorpus, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> affectnet::Result<()> {
    let synth = synthesize_corpus(&SyntheticSpec::new(3, 12), 4)?;
    let data = TaskCorpus::Classification(synth.corpus.clone());
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
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut net = spec.build(&synth.vocabulary, data.task_kind(), &mut rng)?;
    let cfg = TrainConfig {
        epochs: 25,
        batch_size: 12,
        validation_fraction: 0.2,
        patience: 25,
        adam: AdamConfig {
            learning_rate: 0.02,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    train(&mut net, &data, None, &cfg, &mut |_, _, _| {})?;

    let metadata = ArchiveMetadata {
        network: net.config.clone(),
        vocabulary: synth.vocabulary.retained_tokens().to_vec(),
        preprocess: PreprocessOptions::for_network(),
        class_names: Some(synth.corpus.class_names().to_vec()),
        dimensions: None,
        score_ranges: None,
        text_column: "text".into(),
        label_column: Some("label".into()),
        embedding_trainable: true,
        train_config: Some(cfg),
        metrics: None,
    };

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.affect");
    save_archive(&path, &net, &metadata)?;
    println!(
        "archived {} bytes to {}",
        std::fs::metadata(&path)?.len(),
        path.display()
    );

    let (meta, restored) = load_archive(&path)?;
    println!(
        "restored a {:?} model with {} vocabulary tokens",
        meta.network.direction,
        meta.vocabulary.len() + 2
    );

    let doc = &synth.corpus.documents()[0].0;
    let before = net.predict(doc)?;
    let after = restored.predict(doc)?;
    assert_eq!(
        before.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        after.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    println!(
        "identical predictions after reload: class {} with p = {:.4}",
        meta.class_names.as_ref().unwrap()[argmax(&after)],
        after[argmax(&after)]
    );
    Ok(())
}
