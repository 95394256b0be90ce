//! The traditional machine-learning path: full preprocessing (stemming,
//! stopwords), bag-of-words with tf-idf weighting, and a class-weighted
//! linear classifier.
//!
//!     cargo run --example tfidf_baseline

use affectnet::baseline::{train_linear_classifier, LinearConfig, TfidfVectorizer};
use affectnet::corpus::{tokenize, PreprocessOptions, Vocabulary};
use affectnet::metrics::{classification_report, confusion};
use affectnet::objective::class_weights;

fn main() -> affectnet::Result<()> {
    let opts = PreprocessOptions::full_pipeline();
    println!(
        "preprocessing demo: {:?} -> {:?}",
        "The cats were PLAYING loudly!",
        tokenize("The cats were PLAYING loudly!", &opts)
    );

    // A tiny hand-made corpus: joyful vs angry sentences.
    let texts: Vec<(&str, usize)> = vec![
        ("What a wonderful, delightful day", 0),
        ("I am delighted and cheerful today", 0),
        ("Such joyful wonderful news arrived", 0),
        ("Cheerful friends laughing happily", 0),
        ("This is absolutely infuriating", 1),
        ("I am furious about the delay", 1),
        ("That rude remark made me furious", 1),
        ("Outrageous and infuriating service", 1),
    ];
    let docs: Vec<Vec<String>> = texts.iter().map(|(t, _)| tokenize(t, &opts)).collect();
    let labels: Vec<usize> = texts.iter().map(|(_, y)| *y).collect();

    let vocab = Vocabulary::build(&docs, 1, usize::MAX)?;
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(d)).collect();

    let vectorizer = TfidfVectorizer::fit(encoded.iter().map(Vec::as_slice), vocab.size())?;
    for (term, text) in [("delight", "delighted"), ("furiou", "furious")] {
        if let Some(idx) = vocab.index_of(term) {
            println!(
                "idf({text} -> {term}) = {:.3} (document frequency {})",
                vectorizer.idf(idx),
                vectorizer.document_frequency(idx)
            );
        }
    }

    let features: Vec<_> = encoded.iter().map(|d| vectorizer.transform(d)).collect();
    let weights = class_weights(labels.iter().copied(), 2)?;
    let model = train_linear_classifier(
        &features,
        &labels,
        2,
        Some(&weights),
        vocab.size(),
        &LinearConfig::default(),
    )?;

    let predictions: Vec<usize> = features.iter().map(|f| model.predict_label(f)).collect();
    let cm = confusion(&predictions, &labels, 2)?;
    let report = classification_report(&cm)?;
    println!(
        "training-set weighted F1 {:.3}, accuracy {:.3}",
        report.weighted_f1, report.accuracy
    );

    let probe = tokenize("wonderful cheerful laughing", &opts);
    let probs = model.predict_probabilities(&vectorizer.transform(&vocab.encode(&probe)));
    println!("probe 'wonderful cheerful laughing' -> class probabilities {probs:?}");
    Ok(())
}
