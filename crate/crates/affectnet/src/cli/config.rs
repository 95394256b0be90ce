//! Run configuration files: line-based UTF-8 text with `key = value`
//! pairs under bracketed section headers ([data], [model], [train],
//! [transfer]). Unknown sections or keys and duplicate keys are rejected,
//! and every run echoes its effective configuration into the output
//! directory so the echoed file reproduces the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corpus::{ClassificationSchema, RegressionSchema};
use crate::error::{Error, Result};
use crate::layers::{Direction, DropoutSpec};
use crate::training::{
    AdamConfig, EmbeddingSource, FineTuneScope, NetworkSpec, TrainConfig,
};

const DATA_KEYS: &[&str] = &[
    "task",
    "train",
    "text_column",
    "label_column",
    "score_columns",
    "score_ranges",
    "min_count",
    "max_vocab",
];
const MODEL_KEYS: &[&str] = &[
    "hidden_size",
    "embedding_dim",
    "direction",
    "embedding",
    "recurrent_dropout",
    "output_dropout",
];
const TRAIN_KEYS: &[&str] = &[
    "epochs",
    "batch_size",
    "validation_fraction",
    "patience",
    "seed",
    "learning_rate",
    "weighted_loss",
    "split_ratio",
    "runs",
];
const TRANSFER_KEYS: &[&str] = &["source", "scope", "epochs"];

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "data" => Some(DATA_KEYS),
        "model" => Some(MODEL_KEYS),
        "train" => Some(TRAIN_KEYS),
        "transfer" => Some(TRANSFER_KEYS),
        _ => None,
    }
}

type Section = BTreeMap<String, String>;

fn parse_sections(content: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (line_no, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_lowercase();
            if known_keys(&name).is_none() {
                return Err(Error::Config(format!(
                    "line {}: unknown section [{name}]",
                    line_no + 1
                )));
            }
            if sections.contains_key(&name) {
                return Err(Error::Config(format!(
                    "line {}: duplicate section [{name}]",
                    line_no + 1
                )));
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                line_no + 1
            )));
        };
        let section = current.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "line {}: key outside any [section]",
                line_no + 1
            ))
        })?;
        let key = key.trim().to_lowercase();
        let keys = known_keys(section).expect("validated section");
        if !keys.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}' in [{section}] (known: {})",
                line_no + 1,
                keys.join(", ")
            )));
        }
        let entry = sections.get_mut(section).expect("current section exists");
        if entry.contains_key(&key) {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}' in [{section}]",
                line_no + 1
            )));
        }
        entry.insert(key, value.trim().to_string());
    }
    Ok(sections)
}

fn parse_value<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!(
            "[{section}] {key}: cannot parse '{value}'"
        ))
    })
}

fn get_parsed<T: std::str::FromStr>(
    section: &Section,
    name: &str,
    key: &str,
    default: T,
) -> Result<T> {
    match section.get(key) {
        Some(v) => parse_value(name, key, v),
        None => Ok(default),
    }
}

/// Which kind of dataset the run trains on.
#[derive(Debug, Clone)]
pub enum DataTask {
    Classification(ClassificationSchema),
    Regression(RegressionSchema),
}

/// Effective [data] section.
#[derive(Debug, Clone)]
pub struct DataSettings {
    pub task: DataTask,
    pub train_path: PathBuf,
    pub min_count: usize,
    pub max_vocab: usize,
}

/// Effective [transfer] section.
#[derive(Debug, Clone)]
pub struct TransferSettings {
    pub source_path: PathBuf,
    pub scope: FineTuneScope,
    /// Source pretraining epoch cap; target fine-tuning uses [train].
    pub source_epochs: Option<usize>,
}

/// The whole effective run configuration.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub data: DataSettings,
    pub network: NetworkSpec,
    pub train: TrainConfig,
    pub split_ratio: f64,
    pub runs: usize,
    pub transfer: Option<TransferSettings>,
}

fn parse_ranges(value: &str) -> Result<Vec<(f64, f64)>> {
    value
        .split(',')
        .map(|piece| {
            let piece = piece.trim();
            let (lo, hi) = piece.split_once("..").ok_or_else(|| {
                Error::Config(format!(
                    "score range '{piece}' must look like lo..hi"
                ))
            })?;
            let lo: f64 = parse_value("data", "score_ranges", lo.trim())?;
            let hi: f64 = parse_value("data", "score_ranges", hi.trim())?;
            if lo >= hi {
                return Err(Error::Config(format!(
                    "score range '{piece}' is empty"
                )));
            }
            Ok((lo, hi))
        })
        .collect()
}

impl RunSettings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let content = String::from_utf8(bytes).map_err(|e| Error::Config(format!(
            "config is not UTF-8 at byte {}",
            e.utf8_error().valid_up_to()
        )))?;
        Self::parse_str(&content)
    }

    pub fn parse_str(content: &str) -> Result<Self> {
        let sections = parse_sections(content)?;
        let empty = Section::new();
        let data = sections
            .get("data")
            .ok_or_else(|| Error::Config("missing [data] section".into()))?;
        let model = sections.get("model").unwrap_or(&empty);
        let train = sections.get("train").unwrap_or(&empty);

        let task_name = data
            .get("task")
            .ok_or_else(|| Error::Config("[data] task is required".into()))?;
        let text_column = data
            .get("text_column")
            .cloned()
            .unwrap_or_else(|| "text".to_string());
        let task = match task_name.as_str() {
            "classification" => DataTask::Classification(ClassificationSchema {
                text_column,
                label_column: data
                    .get("label_column")
                    .cloned()
                    .unwrap_or_else(|| "label".to_string()),
            }),
            "regression" => {
                let columns: Vec<String> = data
                    .get("score_columns")
                    .ok_or_else(|| {
                        Error::Config("[data] score_columns is required for regression".into())
                    })?
                    .split(',')
                    .map(|c| c.trim().to_string())
                    .collect();
                let ranges = parse_ranges(data.get("score_ranges").ok_or_else(|| {
                    Error::Config("[data] score_ranges is required for regression".into())
                })?)?;
                if columns.len() != ranges.len() {
                    return Err(Error::Config(format!(
                        "{} score columns but {} ranges",
                        columns.len(),
                        ranges.len()
                    )));
                }
                DataTask::Regression(RegressionSchema {
                    text_column,
                    score_columns: columns,
                    score_ranges: ranges,
                })
            }
            other => {
                return Err(Error::Config(format!(
                    "[data] task must be classification or regression, got '{other}'"
                )))
            }
        };
        let train_path = PathBuf::from(data.get("train").ok_or_else(|| {
            Error::Config("[data] train (dataset path) is required".into())
        })?);

        let direction = match model.get("direction").map(String::as_str) {
            None | Some("bidirectional") | Some("bi") => Direction::Bidirectional,
            Some("unidirectional") | Some("uni") => Direction::Unidirectional,
            Some(other) => {
                return Err(Error::Config(format!(
                    "[model] direction must be unidirectional or bidirectional, got '{other}'"
                )))
            }
        };
        let embedding_source = match model.get("embedding").map(String::as_str) {
            None | Some("random") => EmbeddingSource::Random,
            Some(path) => EmbeddingSource::Pretrained(PathBuf::from(path)),
        };
        let network = NetworkSpec {
            embedding_dim: get_parsed(model, "model", "embedding_dim", 100)?,
            hidden_size: get_parsed(model, "model", "hidden_size", 64)?,
            direction,
            dropout: DropoutSpec {
                recurrent_rate: get_parsed(model, "model", "recurrent_dropout", 0.5)?,
                output_rate: get_parsed(model, "model", "output_dropout", 0.5)?,
            },
            embedding_source,
        };
        network.dropout.validate()?;

        let train_config = TrainConfig {
            epochs: get_parsed(train, "train", "epochs", 100)?,
            batch_size: get_parsed(train, "train", "batch_size", 32)?,
            validation_fraction: get_parsed(train, "train", "validation_fraction", 0.1)?,
            patience: get_parsed(train, "train", "patience", 1)?,
            seed: get_parsed(train, "train", "seed", 42)?,
            adam: AdamConfig {
                learning_rate: get_parsed(train, "train", "learning_rate", 1e-3)?,
                ..AdamConfig::default()
            },
            weighted_loss: get_parsed(train, "train", "weighted_loss", true)?,
            scope: FineTuneScope::Full,
        };
        let split_ratio: f64 = get_parsed(train, "train", "split_ratio", 0.8)?;
        if !(split_ratio > 0.0 && split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "[train] split_ratio must lie in (0, 1), got {split_ratio}"
            )));
        }
        let runs: usize = get_parsed(train, "train", "runs", 10)?;

        let transfer = match sections.get("transfer") {
            None => None,
            Some(section) => {
                let source_path = PathBuf::from(section.get("source").ok_or_else(|| {
                    Error::Config("[transfer] source (sentiment CSV) is required".into())
                })?);
                let scope = match section.get("scope").map(String::as_str) {
                    None | Some("full") => FineTuneScope::Full,
                    Some("head_only") => FineTuneScope::HeadOnly,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "[transfer] scope must be full or head_only, got '{other}'"
                        )))
                    }
                };
                let source_epochs = match section.get("epochs") {
                    Some(v) => Some(parse_value("transfer", "epochs", v)?),
                    None => None,
                };
                Some(TransferSettings {
                    source_path,
                    scope,
                    source_epochs,
                })
            }
        };

        Ok(Self {
            data: DataSettings {
                task,
                train_path,
                min_count: get_parsed(data, "data", "min_count", 1)?,
                max_vocab: get_parsed(data, "data", "max_vocab", 50_000)?,
            },
            network,
            train: train_config,
            split_ratio,
            runs,
            transfer,
        })
    }

    /// Serializes the effective configuration; parsing the result yields
    /// the same settings.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        out.push_str("[data]\n");
        match &self.data.task {
            DataTask::Classification(schema) => {
                writeln!(out, "task = classification").unwrap();
                writeln!(out, "train = {}", self.data.train_path.display()).unwrap();
                writeln!(out, "text_column = {}", schema.text_column).unwrap();
                writeln!(out, "label_column = {}", schema.label_column).unwrap();
            }
            DataTask::Regression(schema) => {
                writeln!(out, "task = regression").unwrap();
                writeln!(out, "train = {}", self.data.train_path.display()).unwrap();
                writeln!(out, "text_column = {}", schema.text_column).unwrap();
                writeln!(out, "score_columns = {}", schema.score_columns.join(",")).unwrap();
                let ranges: Vec<String> = schema
                    .score_ranges
                    .iter()
                    .map(|(lo, hi)| format!("{lo}..{hi}"))
                    .collect();
                writeln!(out, "score_ranges = {}", ranges.join(",")).unwrap();
            }
        }
        writeln!(out, "min_count = {}", self.data.min_count).unwrap();
        writeln!(out, "max_vocab = {}", self.data.max_vocab).unwrap();

        out.push_str("\n[model]\n");
        writeln!(out, "hidden_size = {}", self.network.hidden_size).unwrap();
        writeln!(out, "embedding_dim = {}", self.network.embedding_dim).unwrap();
        let direction = match self.network.direction {
            Direction::Bidirectional => "bidirectional",
            Direction::Unidirectional => "unidirectional",
        };
        writeln!(out, "direction = {direction}").unwrap();
        match &self.network.embedding_source {
            EmbeddingSource::Random => writeln!(out, "embedding = random").unwrap(),
            EmbeddingSource::Pretrained(p) => writeln!(out, "embedding = {}", p.display()).unwrap(),
        }
        writeln!(out, "recurrent_dropout = {}", self.network.dropout.recurrent_rate).unwrap();
        writeln!(out, "output_dropout = {}", self.network.dropout.output_rate).unwrap();

        out.push_str("\n[train]\n");
        writeln!(out, "epochs = {}", self.train.epochs).unwrap();
        writeln!(out, "batch_size = {}", self.train.batch_size).unwrap();
        writeln!(out, "validation_fraction = {}", self.train.validation_fraction).unwrap();
        writeln!(out, "patience = {}", self.train.patience).unwrap();
        writeln!(out, "seed = {}", self.train.seed).unwrap();
        writeln!(out, "learning_rate = {}", self.train.adam.learning_rate).unwrap();
        writeln!(out, "weighted_loss = {}", self.train.weighted_loss).unwrap();
        writeln!(out, "split_ratio = {}", self.split_ratio).unwrap();
        writeln!(out, "runs = {}", self.runs).unwrap();

        if let Some(transfer) = &self.transfer {
            out.push_str("\n[transfer]\n");
            writeln!(out, "source = {}", transfer.source_path.display()).unwrap();
            let scope = match transfer.scope {
                FineTuneScope::Full => "full",
                FineTuneScope::HeadOnly => "head_only",
            };
            writeln!(out, "scope = {scope}").unwrap();
            if let Some(epochs) = transfer.source_epochs {
                writeln!(out, "epochs = {epochs}").unwrap();
            }
        }
        out
    }
}
