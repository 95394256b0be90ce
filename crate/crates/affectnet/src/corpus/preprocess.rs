use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::porter;

/// The English stopword list shipped with the crate (version 1), one token
/// per line.
pub const STOPWORDS_EN_V1: &str = include_str!("stopwords_en_v1.txt");

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_EN_V1.lines().map(str::trim).collect())
}

/// True if `token` is on the shipped stopword list. Matching is exact, so
/// callers normally lowercase first.
pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Text cleanup options, applied in a fixed order: lowercase, strip
/// punctuation, strip numbers, stopword removal, stemming, truncation.
///
/// The deep models consume near-raw word sequences
/// ([`PreprocessOptions::for_network`]); the bag-of-words baseline uses the
/// full pipeline ([`PreprocessOptions::full_pipeline`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub strip_numbers: bool,
    pub remove_stopwords: bool,
    pub stem: bool,
    /// Keep at most this many tokens (tail truncation); `None` is unlimited.
    pub max_sequence_length: Option<usize>,
}

impl PreprocessOptions {
    /// Lowercase and punctuation stripping only; embeddings are trained on
    /// unstemmed tokens.
    pub fn for_network() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            strip_numbers: false,
            remove_stopwords: false,
            stem: false,
            max_sequence_length: Some(512),
        }
    }

    /// Everything on: the bag-of-words pipeline.
    pub fn full_pipeline() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            strip_numbers: true,
            remove_stopwords: true,
            stem: true,
            max_sequence_length: Some(512),
        }
    }
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self::for_network()
    }
}

/// Splits `text` into tokens after applying the enabled options in order.
/// Deterministic: the same text and options always give the same tokens.
pub fn tokenize(text: &str, opts: &PreprocessOptions) -> Vec<String> {
    let lowered;
    let text = if opts.lowercase {
        lowered = text.to_lowercase();
        &lowered
    } else {
        text
    };

    let cleaned: String = if opts.strip_punctuation || opts.strip_numbers {
        text.chars()
            .filter(|&c| {
                if opts.strip_punctuation && !c.is_alphanumeric() && !c.is_whitespace() {
                    return false;
                }
                if opts.strip_numbers && c.is_numeric() {
                    return false;
                }
                true
            })
            .collect()
    } else {
        text.to_string()
    };

    let mut tokens: Vec<String> = cleaned
        .split_whitespace()
        .filter(|t| !opts.remove_stopwords || !is_stopword(t))
        .map(|t| {
            if opts.stem {
                porter::stem(t)
            } else {
                t.to_string()
            }
        })
        .collect();

    if let Some(limit) = opts.max_sequence_length {
        tokens.truncate(limit);
    }
    tokens
}
