//! Seeded synthetic corpora with known structure, used as test oracles:
//! marker corpora that a presence rule classifies perfectly, an
//! imbalanced two-class corpus where weighted and unweighted objectives
//! provably disagree, and paired sentiment/affect tasks with shared
//! markers for transfer experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LabeledCorpus, Vocabulary};
use crate::error::{Error, Result};

/// Shape of a marker corpus: each class has a designated marker token and
/// every document starts with its class marker.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub docs_per_class: usize,
    /// Number of distinct noise tokens (disjoint from the markers).
    pub vocab_size: usize,
    /// Probability that a non-leading position holds a noise token instead
    /// of the class marker.
    pub noise_rate: f64,
    pub doc_len: usize,
}

impl SyntheticSpec {
    pub fn new(classes: usize, docs_per_class: usize) -> Self {
        Self {
            classes,
            docs_per_class,
            vocab_size: 20,
            noise_rate: 0.3,
            doc_len: 8,
        }
    }
}

/// A generated corpus together with its vocabulary and marker tokens.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: LabeledCorpus,
    pub vocabulary: Vocabulary,
    /// Marker token per class, aligned with class indices.
    pub markers: Vec<String>,
}

impl SyntheticCorpus {
    /// Rule-based oracle: the class whose marker appears in the document.
    pub fn marker_class(&self, doc: &[usize]) -> Option<usize> {
        self.markers.iter().position(|m| {
            self.vocabulary
                .index_of(m)
                .is_some_and(|idx| doc.contains(&idx))
        })
    }

    /// Fraction of documents the marker rule classifies correctly.
    pub fn oracle_accuracy(&self) -> f64 {
        let hits = self
            .corpus
            .documents()
            .iter()
            .filter(|(doc, label)| self.marker_class(doc) == Some(*label))
            .count();
        hits as f64 / self.corpus.len() as f64
    }
}

fn noise_token(rng: &mut ChaCha8Rng, vocab_size: usize) -> String {
    format!("noise{}", rng.gen_range(0..vocab_size))
}

fn build_vocab(docs: &[(Vec<String>, usize)]) -> Result<Vocabulary> {
    let lists: Vec<Vec<String>> = docs.iter().map(|(t, _)| t.clone()).collect();
    Vocabulary::build(&lists, 1, usize::MAX)
}

fn encode(docs: Vec<(Vec<String>, usize)>, vocab: &Vocabulary, names: Vec<String>) -> Result<LabeledCorpus> {
    let encoded = docs
        .into_iter()
        .map(|(tokens, label)| (vocab.encode(&tokens), label))
        .collect();
    LabeledCorpus::new(encoded, names)
}

/// Generates a separable marker corpus. With `noise_rate` 0 every document
/// is its marker repeated; with `noise_rate` < 1 the marker rule still
/// classifies every document correctly because noise tokens never collide
/// with markers.
pub fn synthesize_corpus(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCorpus> {
    if spec.classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    if spec.doc_len == 0 || spec.docs_per_class == 0 || spec.vocab_size == 0 {
        return Err(Error::InvalidArgument(
            "doc_len, docs_per_class and vocab_size must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let markers: Vec<String> = (0..spec.classes).map(|k| format!("marker{k}")).collect();

    let mut docs = Vec::with_capacity(spec.classes * spec.docs_per_class);
    for (class, marker) in markers.iter().enumerate() {
        for _ in 0..spec.docs_per_class {
            let mut tokens = vec![marker.clone()];
            for _ in 1..spec.doc_len {
                if rng.gen::<f64>() < spec.noise_rate {
                    tokens.push(noise_token(&mut rng, spec.vocab_size));
                } else {
                    tokens.push(marker.clone());
                }
            }
            docs.push((tokens, class));
        }
    }
    let vocabulary = build_vocab(&docs)?;
    let names = (0..spec.classes).map(|k| format!("class{k}")).collect();
    let corpus = encode(docs, &vocabulary, names)?;
    Ok(SyntheticCorpus {
        corpus,
        vocabulary,
        markers,
    })
}

/// Shape of the imbalanced two-class corpus. Class 0 is the majority.
/// A `leak_rate` fraction of majority documents carry the minority marker
/// instead of their own, so marker presence is ambiguous evidence: the
/// unweighted optimum assigns those documents to the majority class while
/// the class-weighted optimum assigns them to the minority.
#[derive(Debug, Clone)]
pub struct ImbalancedSpec {
    pub majority_docs: usize,
    pub minority_docs: usize,
    pub leak_rate: f64,
    pub vocab_size: usize,
    pub doc_len: usize,
}

impl Default for ImbalancedSpec {
    fn default() -> Self {
        Self {
            majority_docs: 90,
            minority_docs: 10,
            leak_rate: 0.3,
            vocab_size: 12,
            doc_len: 6,
        }
    }
}

pub fn synthesize_imbalanced(spec: &ImbalancedSpec, seed: u64) -> Result<SyntheticCorpus> {
    if spec.majority_docs == 0 || spec.minority_docs == 0 {
        return Err(Error::InvalidArgument("both classes need documents".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let markers = vec!["markermaj".to_string(), "markermin".to_string()];
    let leaked = (spec.leak_rate * spec.majority_docs as f64).round() as usize;

    let mut docs = Vec::new();
    for i in 0..spec.majority_docs {
        let marker = if i < leaked { &markers[1] } else { &markers[0] };
        let mut tokens = vec![marker.clone()];
        for _ in 1..spec.doc_len {
            tokens.push(noise_token(&mut rng, spec.vocab_size));
        }
        docs.push((tokens, 0));
    }
    for _ in 0..spec.minority_docs {
        let mut tokens = vec![markers[1].clone()];
        for _ in 1..spec.doc_len {
            tokens.push(noise_token(&mut rng, spec.vocab_size));
        }
        docs.push((tokens, 1));
    }
    let vocabulary = build_vocab(&docs)?;
    let corpus = encode(docs, &vocabulary, vec!["majority".into(), "minority".into()])?;
    Ok(SyntheticCorpus {
        corpus,
        vocabulary,
        markers,
    })
}

/// Shape of a paired sentiment source task and affect target task over a
/// shared vocabulary. The source is binary sentiment over
/// `2 * markers_per_polarity` marker tokens, half positive and half
/// negative. Target class `j` is anchored by marker `j/2` of the positive
/// list (even `j`) or the negative list (odd `j`), so neighboring target
/// classes sit on opposite sides of the polarity the source teaches.
/// Every document is noise with exactly one marker at a random position:
/// the encoder must learn to carry marker information across the whole
/// sequence, and that carrying behavior is what transfers.
#[derive(Debug, Clone)]
pub struct TransferPairSpec {
    /// Number of affect classes (at most `2 * markers_per_polarity`).
    pub target_classes: usize,
    pub markers_per_polarity: usize,
    pub source_docs_per_class: usize,
    pub target_docs_per_class: usize,
    pub vocab_size: usize,
    pub doc_len: usize,
}

impl Default for TransferPairSpec {
    fn default() -> Self {
        Self {
            target_classes: 2,
            markers_per_polarity: 2,
            source_docs_per_class: 120,
            target_docs_per_class: 20,
            vocab_size: 30,
            doc_len: 12,
        }
    }
}

/// Paired source (binary sentiment) and target (affect) corpora over one
/// vocabulary.
#[derive(Debug, Clone)]
pub struct SyntheticTransferPair {
    pub vocabulary: Vocabulary,
    /// Binary corpus with class names ["negative", "positive"].
    pub source: LabeledCorpus,
    pub target: LabeledCorpus,
    pub markers: Vec<String>,
}

pub fn synthesize_transfer_pair(spec: &TransferPairSpec, seed: u64) -> Result<SyntheticTransferPair> {
    if spec.target_classes < 2 || spec.markers_per_polarity == 0 {
        return Err(Error::InvalidArgument(
            "need at least 2 target classes and 1 marker per polarity".into(),
        ));
    }
    if spec.target_classes > 2 * spec.markers_per_polarity {
        return Err(Error::InvalidArgument(format!(
            "{} target classes need more than {} markers per polarity",
            spec.target_classes, spec.markers_per_polarity
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positive: Vec<String> = (0..spec.markers_per_polarity)
        .map(|k| format!("posmark{k}"))
        .collect();
    let negative: Vec<String> = (0..spec.markers_per_polarity)
        .map(|k| format!("negmark{k}"))
        .collect();

    let fill = |rng: &mut ChaCha8Rng, marker: &String| {
        let mut tokens: Vec<String> = (0..spec.doc_len)
            .map(|_| noise_token(rng, spec.vocab_size))
            .collect();
        let position = rng.gen_range(0..spec.doc_len);
        tokens[position] = marker.clone();
        tokens
    };

    // Source: label 0 = negative, 1 = positive.
    let mut source_docs = Vec::new();
    for (label, group) in [(0usize, &negative), (1usize, &positive)] {
        for _ in 0..spec.source_docs_per_class {
            let marker = &group[rng.gen_range(0..group.len())];
            source_docs.push((fill(&mut rng, marker), label));
        }
    }

    // Target class j anchors on positive[j/2] (even j) or negative[j/2].
    let markers: Vec<String> = (0..spec.target_classes)
        .map(|j| {
            if j % 2 == 0 {
                positive[j / 2].clone()
            } else {
                negative[j / 2].clone()
            }
        })
        .collect();
    let mut target_docs = Vec::new();
    for (class, marker) in markers.iter().enumerate() {
        for _ in 0..spec.target_docs_per_class {
            target_docs.push((fill(&mut rng, marker), class));
        }
    }

    let all_lists: Vec<Vec<String>> = source_docs
        .iter()
        .chain(&target_docs)
        .map(|(t, _)| t.clone())
        .collect();
    let vocabulary = Vocabulary::build(&all_lists, 1, usize::MAX)?;
    let source = encode(
        source_docs,
        &vocabulary,
        vec!["negative".into(), "positive".into()],
    )?;
    let target_names = (0..spec.target_classes).map(|k| format!("affect{k}")).collect();
    let target = encode(target_docs, &vocabulary, target_names)?;
    Ok(SyntheticTransferPair {
        vocabulary,
        source,
        target,
        markers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_corpus_counts() {
        let synth = synthesize_corpus(&SyntheticSpec::new(2, 5), 1).unwrap();
        assert_eq!(synth.corpus.len(), 10);
        assert_eq!(synth.corpus.class_counts(), &[5, 5]);
    }

    #[test]
    fn zero_noise_repeats_marker() {
        let spec = SyntheticSpec {
            noise_rate: 0.0,
            ..SyntheticSpec::new(3, 2)
        };
        let synth = synthesize_corpus(&spec, 9).unwrap();
        for (doc, label) in synth.corpus.documents() {
            let marker_idx = synth.vocabulary.index_of(&synth.markers[*label]).unwrap();
            assert!(doc.iter().all(|&t| t == marker_idx));
        }
    }

    #[test]
    fn marker_oracle_is_perfect() {
        for seed in [0, 1, 2] {
            let synth = synthesize_corpus(&SyntheticSpec::new(4, 8), seed).unwrap();
            assert_eq!(synth.oracle_accuracy(), 1.0);
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = synthesize_corpus(&SyntheticSpec::new(3, 4), 42).unwrap();
        let b = synthesize_corpus(&SyntheticSpec::new(3, 4), 42).unwrap();
        assert_eq!(a.corpus.documents(), b.corpus.documents());
    }

    #[test]
    fn rejects_single_class() {
        assert!(synthesize_corpus(&SyntheticSpec::new(1, 5), 0).is_err());
    }

    #[test]
    fn imbalanced_has_planned_leak() {
        let spec = ImbalancedSpec::default();
        let synth = synthesize_imbalanced(&spec, 3).unwrap();
        assert_eq!(synth.corpus.class_counts(), &[90, 10]);
        let min_idx = synth.vocabulary.index_of("markermin").unwrap();
        let leaked = synth
            .corpus
            .documents()
            .iter()
            .filter(|(doc, label)| *label == 0 && doc.contains(&min_idx))
            .count();
        assert_eq!(leaked, 27);
    }

    #[test]
    fn transfer_pair_shares_vocabulary() {
        let pair = synthesize_transfer_pair(&TransferPairSpec::default(), 5).unwrap();
        assert_eq!(pair.source.num_classes(), 2);
        assert_eq!(pair.target.num_classes(), 2);
        // Every target marker index appears in some source document.
        for marker in &pair.markers {
            let idx = pair.vocabulary.index_of(marker).unwrap();
            assert!(
                pair.source
                    .documents()
                    .iter()
                    .any(|(doc, _)| doc.contains(&idx)),
                "marker {marker} missing from source"
            );
        }
        // Each document carries exactly one marker occurrence.
        let marker_indices: Vec<usize> = pair
            .markers
            .iter()
            .map(|m| pair.vocabulary.index_of(m).unwrap())
            .collect();
        for (doc, label) in pair.target.documents() {
            let hits = doc
                .iter()
                .filter(|t| marker_indices.contains(t))
                .count();
            assert_eq!(hits, 1);
            assert!(doc.contains(&marker_indices[*label]));
        }
    }

    #[test]
    fn transfer_pair_rejects_too_many_classes() {
        let spec = TransferPairSpec {
            target_classes: 6,
            markers_per_polarity: 2,
            ..TransferPairSpec::default()
        };
        assert!(synthesize_transfer_pair(&spec, 0).is_err());
    }
}
