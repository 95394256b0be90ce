//! Dataset ingestion: preprocessing and tokenization, vocabulary
//! construction, index encoding, CSV loaders for labeled and scored
//! corpora, seeded splits, and synthetic oracle corpora for tests.
//!
//! Dataset files are UTF-8 CSV with a header line. Classification files
//! carry a text column and a label column; regression files carry a text
//! column plus one decimal column per affective dimension. Fields
//! containing commas are double-quoted with embedded quotes doubled.

mod porter;
mod preprocess;
mod synthetic;

pub use porter::stem;
pub use preprocess::{is_stopword, tokenize, PreprocessOptions, STOPWORDS_EN_V1};
pub use synthetic::{
    synthesize_corpus, synthesize_imbalanced, synthesize_transfer_pair, ImbalancedSpec,
    SyntheticCorpus, SyntheticSpec, SyntheticTransferPair, TransferPairSpec,
};

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Reserved index for padding. The embedding row for it stays zero.
pub const PAD_INDEX: usize = 0;
/// Reserved index for out-of-vocabulary tokens.
pub const UNK_INDEX: usize = 1;
/// Marker strings for the reserved indices; real tokens with these surface
/// forms are skipped during vocabulary construction.
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Bijective token/index map with two reserved entries: 0 for padding and
/// 1 for unknown tokens. Indices are contiguous.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    tokens: Vec<String>,
    min_count: usize,
    max_size: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from token lists. Tokens with frequency below
    /// `min_count` are excluded; ranking is by descending frequency with
    /// lexicographic tie-break; `max_size` caps the total size including
    /// the two reserved entries.
    pub fn build<S: AsRef<str>>(corpora: &[Vec<S>], min_count: usize, max_size: usize) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::InvalidArgument("min_count must be >= 1".into()));
        }
        if max_size < 2 {
            return Err(Error::InvalidArgument(
                "max_size must be >= 2 to hold the reserved entries".into(),
            ));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpora {
            for token in doc {
                let t = token.as_ref();
                if t == PAD_TOKEN || t == UNK_TOKEN {
                    continue;
                }
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        // Descending frequency; the BTreeMap already yields ties in
        // ascending lexicographic order and the sort is stable.
        ranked.sort_by_key(|&(_, count)| std::cmp::Reverse(count));
        ranked.truncate(max_size - 2);

        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        tokens.extend(ranked.iter().map(|(t, _)| t.to_string()));
        let token_to_index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            token_to_index,
            tokens,
            min_count,
            max_size,
        })
    }

    /// Rebuilds a vocabulary from the retained (non-reserved) tokens in
    /// index order, as stored in a model archive.
    pub fn from_retained_tokens(retained: Vec<String>) -> Self {
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        tokens.extend(retained);
        let token_to_index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            token_to_index,
            tokens,
            min_count: 1,
            max_size: usize::MAX,
        }
    }

    /// Total size including the two reserved entries.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token_at(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Tokens at indices 2.., in index order.
    pub fn retained_tokens(&self) -> &[String] {
        &self.tokens[2..]
    }

    /// Maps each token to its index; out-of-vocabulary tokens map to
    /// [`UNK_INDEX`].
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.index_of(t.as_ref()).unwrap_or(UNK_INDEX))
            .collect()
    }
}

/// Documents as token-index sequences with one class label each.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    documents: Vec<(Vec<usize>, usize)>,
    class_names: Vec<String>,
    class_counts: Vec<usize>,
}

impl LabeledCorpus {
    pub fn new(documents: Vec<(Vec<usize>, usize)>, class_names: Vec<String>) -> Result<Self> {
        let k = class_names.len();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "a labeled corpus needs at least one class".into(),
            ));
        }
        let mut class_counts = vec![0usize; k];
        for (i, (seq, label)) in documents.iter().enumerate() {
            if seq.is_empty() {
                return Err(Error::Validation(format!("document {i} has an empty sequence")));
            }
            if *label >= k {
                return Err(Error::Validation(format!(
                    "document {i} has label {label} outside 0..{k}"
                )));
            }
            class_counts[*label] += 1;
        }
        Ok(Self {
            documents,
            class_names,
            class_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[(Vec<usize>, usize)] {
        &self.documents
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.documents.iter().map(|(_, l)| *l)
    }
}

/// Documents as token-index sequences with one intensity score per
/// affective dimension.
#[derive(Debug, Clone)]
pub struct ScoredCorpus {
    documents: Vec<(Vec<usize>, Vec<f64>)>,
    dimensions: Vec<String>,
    score_ranges: Vec<(f64, f64)>,
}

impl ScoredCorpus {
    pub fn new(
        documents: Vec<(Vec<usize>, Vec<f64>)>,
        dimensions: Vec<String>,
        score_ranges: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::InvalidArgument(
                "a scored corpus needs at least one dimension".into(),
            ));
        }
        if dimensions.len() != score_ranges.len() {
            return Err(Error::InvalidArgument(format!(
                "{} dimensions but {} score ranges",
                dimensions.len(),
                score_ranges.len()
            )));
        }
        for (i, (seq, scores)) in documents.iter().enumerate() {
            if seq.is_empty() {
                return Err(Error::Validation(format!("document {i} has an empty sequence")));
            }
            if scores.len() != dimensions.len() {
                return Err(Error::Validation(format!(
                    "document {i} has {} scores for {} dimensions",
                    scores.len(),
                    dimensions.len()
                )));
            }
            for (d, (&s, &(lo, hi))) in scores.iter().zip(&score_ranges).enumerate() {
                if !(lo..=hi).contains(&s) {
                    return Err(Error::Validation(format!(
                        "document {i}: score {s} for dimension {} outside [{lo}, {hi}]",
                        dimensions[d]
                    )));
                }
            }
        }
        Ok(Self {
            documents,
            dimensions,
            score_ranges,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[(Vec<usize>, Vec<f64>)] {
        &self.documents
    }

    pub fn dimensions(&self) -> &[String] {
        &self.dimensions
    }

    pub fn score_ranges(&self) -> &[(f64, f64)] {
        &self.score_ranges
    }
}

/// Column names for a classification CSV.
#[derive(Debug, Clone)]
pub struct ClassificationSchema {
    pub text_column: String,
    pub label_column: String,
}

impl ClassificationSchema {
    pub fn new(text_column: impl Into<String>, label_column: impl Into<String>) -> Self {
        Self {
            text_column: text_column.into(),
            label_column: label_column.into(),
        }
    }
}

/// Column names and declared score ranges for a regression CSV.
#[derive(Debug, Clone)]
pub struct RegressionSchema {
    pub text_column: String,
    pub score_columns: Vec<String>,
    pub score_ranges: Vec<(f64, f64)>,
}

/// Tokenized classification rows, before vocabulary encoding.
#[derive(Debug, Clone)]
pub struct TokenizedClassification {
    pub documents: Vec<(Vec<String>, String)>,
    /// Rows whose text was empty after preprocessing.
    pub dropped_rows: usize,
}

impl TokenizedClassification {
    pub fn token_lists(&self) -> Vec<Vec<String>> {
        self.documents.iter().map(|(t, _)| t.clone()).collect()
    }

    /// Distinct labels in ascending lexicographic order.
    pub fn label_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.documents.iter().map(|(_, l)| l.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    /// Encodes against `vocab`, inferring class names from the rows.
    pub fn encode(&self, vocab: &Vocabulary) -> Result<LabeledCorpus> {
        self.encode_with_names(vocab, &self.label_names())
    }

    /// Encodes against `vocab` using a fixed class-name ordering; rows with
    /// labels outside `names` are rejected.
    pub fn encode_with_names(&self, vocab: &Vocabulary, names: &[String]) -> Result<LabeledCorpus> {
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let documents = self
            .documents
            .iter()
            .map(|(tokens, label)| {
                let class = index.get(label.as_str()).copied().ok_or_else(|| {
                    Error::Validation(format!("label '{label}' not among known classes {names:?}"))
                })?;
                Ok((vocab.encode(tokens), class))
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledCorpus::new(documents, names.to_vec())
    }
}

/// Tokenized regression rows, before vocabulary encoding.
#[derive(Debug, Clone)]
pub struct TokenizedRegression {
    pub documents: Vec<(Vec<String>, Vec<f64>)>,
    pub dimensions: Vec<String>,
    pub score_ranges: Vec<(f64, f64)>,
    pub dropped_rows: usize,
}

impl TokenizedRegression {
    pub fn token_lists(&self) -> Vec<Vec<String>> {
        self.documents.iter().map(|(t, _)| t.clone()).collect()
    }

    pub fn encode(&self, vocab: &Vocabulary) -> Result<ScoredCorpus> {
        let documents = self
            .documents
            .iter()
            .map(|(tokens, scores)| (vocab.encode(tokens), scores.clone()))
            .collect();
        ScoredCorpus::new(
            documents,
            self.dimensions.clone(),
            self.score_ranges.clone(),
        )
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    String::from_utf8(bytes).map_err(|e| Error::Encoding {
        offset: e.utf8_error().valid_up_to(),
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or_default();
    Error::Data {
        line,
        message: e.to_string(),
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| {
            Error::Schema(format!(
                "unknown column '{name}'; file has columns {:?}",
                headers.iter().collect::<Vec<_>>()
            ))
        })
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn field(record: &csv::StringRecord, idx: usize, line: usize) -> Result<&str> {
    record.get(idx).ok_or(Error::Data {
        line,
        message: format!("missing field {idx}"),
    })
}

/// Reads and tokenizes a classification CSV. Rows that are empty after
/// preprocessing are dropped and counted.
pub fn tokenize_classification_csv(
    path: &Path,
    schema: &ClassificationSchema,
    opts: &PreprocessOptions,
) -> Result<TokenizedClassification> {
    let content = read_utf8(path)?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let text_idx = column_index(&headers, &schema.text_column)?;
    let label_idx = column_index(&headers, &schema.label_column)?;

    let mut documents = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let text = field(&record, text_idx, line)?;
        let label = field(&record, label_idx, line)?.trim();
        if label.is_empty() {
            return Err(Error::Data {
                line,
                message: "empty label".into(),
            });
        }
        let tokens = tokenize(text, opts);
        if tokens.is_empty() {
            dropped += 1;
        } else {
            documents.push((tokens, label.to_string()));
        }
    }
    Ok(TokenizedClassification {
        documents,
        dropped_rows: dropped,
    })
}

/// Reads and tokenizes a regression CSV, validating every score against
/// its declared range.
pub fn tokenize_regression_csv(
    path: &Path,
    schema: &RegressionSchema,
    opts: &PreprocessOptions,
) -> Result<TokenizedRegression> {
    if schema.score_columns.len() != schema.score_ranges.len() {
        return Err(Error::Schema(format!(
            "{} score columns but {} ranges",
            schema.score_columns.len(),
            schema.score_ranges.len()
        )));
    }
    if schema.score_columns.is_empty() {
        return Err(Error::Schema("regression schema has no score columns".into()));
    }
    let content = read_utf8(path)?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let text_idx = column_index(&headers, &schema.text_column)?;
    let score_idx: Vec<usize> = schema
        .score_columns
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;

    let mut documents = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let text = field(&record, text_idx, line)?;
        let mut scores = Vec::with_capacity(score_idx.len());
        for (dim, &idx) in score_idx.iter().enumerate() {
            let raw = field(&record, idx, line)?.trim();
            let value: f64 = raw.parse().map_err(|_| Error::Data {
                line,
                message: format!("'{raw}' is not a decimal score"),
            })?;
            let (lo, hi) = schema.score_ranges[dim];
            if !(lo..=hi).contains(&value) {
                return Err(Error::Validation(format!(
                    "line {line}: score {value} for dimension {} outside [{lo}, {hi}]",
                    schema.score_columns[dim]
                )));
            }
            scores.push(value);
        }
        let tokens = tokenize(text, opts);
        if tokens.is_empty() {
            dropped += 1;
        } else {
            documents.push((tokens, scores));
        }
    }
    Ok(TokenizedRegression {
        documents,
        dimensions: schema.score_columns.clone(),
        score_ranges: schema.score_ranges.clone(),
        dropped_rows: dropped,
    })
}

/// Two tokenizations of the same classification file that keep exactly the
/// same rows (a row is dropped when empty under either option set), so a
/// deep-model view and a bag-of-words view stay paired document for
/// document.
pub fn tokenize_classification_views(
    path: &Path,
    schema: &ClassificationSchema,
    first: &PreprocessOptions,
    second: &PreprocessOptions,
) -> Result<(TokenizedClassification, TokenizedClassification)> {
    let content = read_utf8(path)?;
    let mut reader = csv::Reader::from_reader(content.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let text_idx = column_index(&headers, &schema.text_column)?;
    let label_idx = column_index(&headers, &schema.label_column)?;

    let mut docs_a = Vec::new();
    let mut docs_b = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let text = field(&record, text_idx, line)?;
        let label = field(&record, label_idx, line)?.trim();
        if label.is_empty() {
            return Err(Error::Data {
                line,
                message: "empty label".into(),
            });
        }
        let tokens_a = tokenize(text, first);
        let tokens_b = tokenize(text, second);
        if tokens_a.is_empty() || tokens_b.is_empty() {
            dropped += 1;
        } else {
            docs_a.push((tokens_a, label.to_string()));
            docs_b.push((tokens_b, label.to_string()));
        }
    }
    Ok((
        TokenizedClassification {
            documents: docs_a,
            dropped_rows: dropped,
        },
        TokenizedClassification {
            documents: docs_b,
            dropped_rows: dropped,
        },
    ))
}

/// Same pairing for a regression file.
pub fn tokenize_regression_views(
    path: &Path,
    schema: &RegressionSchema,
    first: &PreprocessOptions,
    second: &PreprocessOptions,
) -> Result<(TokenizedRegression, TokenizedRegression)> {
    let full = tokenize_regression_csv(path, schema, &PreprocessOptions {
        lowercase: false,
        strip_punctuation: false,
        strip_numbers: false,
        remove_stopwords: false,
        stem: false,
        max_sequence_length: None,
    })?;
    let mut docs_a = Vec::new();
    let mut docs_b = Vec::new();
    let mut dropped = full.dropped_rows;
    for (tokens, scores) in &full.documents {
        let text = tokens.join(" ");
        let tokens_a = tokenize(&text, first);
        let tokens_b = tokenize(&text, second);
        if tokens_a.is_empty() || tokens_b.is_empty() {
            dropped += 1;
        } else {
            docs_a.push((tokens_a, scores.clone()));
            docs_b.push((tokens_b, scores.clone()));
        }
    }
    let make = |documents| TokenizedRegression {
        documents,
        dimensions: full.dimensions.clone(),
        score_ranges: full.score_ranges.clone(),
        dropped_rows: dropped,
    };
    Ok((make(docs_a), make(docs_b)))
}

/// Loaded classification dataset with the vocabulary built from it.
#[derive(Debug)]
pub struct LoadedClassification {
    pub corpus: LabeledCorpus,
    pub vocabulary: Vocabulary,
    pub dropped_rows: usize,
}

/// Loads a classification CSV end to end: tokenize, build a vocabulary,
/// encode. The number of classes is inferred from the distinct labels.
pub fn load_classification_dataset(
    path: &Path,
    schema: &ClassificationSchema,
    opts: &PreprocessOptions,
    min_count: usize,
    max_size: usize,
) -> Result<LoadedClassification> {
    let tokenized = tokenize_classification_csv(path, schema, opts)?;
    let vocabulary = Vocabulary::build(&tokenized.token_lists(), min_count, max_size)?;
    let corpus = tokenized.encode(&vocabulary)?;
    Ok(LoadedClassification {
        corpus,
        vocabulary,
        dropped_rows: tokenized.dropped_rows,
    })
}

/// Loaded regression dataset with the vocabulary built from it.
#[derive(Debug)]
pub struct LoadedRegression {
    pub corpus: ScoredCorpus,
    pub vocabulary: Vocabulary,
    pub dropped_rows: usize,
}

pub fn load_regression_dataset(
    path: &Path,
    schema: &RegressionSchema,
    opts: &PreprocessOptions,
    min_count: usize,
    max_size: usize,
) -> Result<LoadedRegression> {
    let tokenized = tokenize_regression_csv(path, schema, opts)?;
    let vocabulary = Vocabulary::build(&tokenized.token_lists(), min_count, max_size)?;
    let corpus = tokenized.encode(&vocabulary)?;
    Ok(LoadedRegression {
        corpus,
        vocabulary,
        dropped_rows: tokenized.dropped_rows,
    })
}

/// Seeded permutation split: same seed, same partition. The first part
/// holds `round(ratio * n)` documents (clamped so both parts are
/// non-empty).
fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot split a corpus of {n} document(s)"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let take = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
    let rest = order.split_off(take);
    Ok((order, rest))
}

pub fn split_labeled(
    corpus: &LabeledCorpus,
    ratio: f64,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus)> {
    let (left, right) = split_indices(corpus.len(), ratio, seed)?;
    let pick = |idx: &[usize]| {
        LabeledCorpus::new(
            idx.iter().map(|&i| corpus.documents[i].clone()).collect(),
            corpus.class_names.clone(),
        )
    };
    Ok((pick(&left)?, pick(&right)?))
}

pub fn split_scored(
    corpus: &ScoredCorpus,
    ratio: f64,
    seed: u64,
) -> Result<(ScoredCorpus, ScoredCorpus)> {
    let (left, right) = split_indices(corpus.len(), ratio, seed)?;
    let pick = |idx: &[usize]| {
        ScoredCorpus::new(
            idx.iter().map(|&i| corpus.documents[i].clone()).collect(),
            corpus.dimensions.clone(),
            corpus.score_ranges.clone(),
        )
    };
    Ok((pick(&left)?, pick(&right)?))
}
