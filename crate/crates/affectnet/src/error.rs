use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid run configuration (bad key, bad value, missing section).
    #[error("config error: {0}")]
    Config(String),

    /// Input text is not valid UTF-8.
    #[error("invalid UTF-8 in input at byte offset {offset}")]
    Encoding { offset: usize },

    /// Dataset schema problem (unknown column, wrong task shape).
    #[error("schema error: {0}")]
    Schema(String),

    /// Malformed dataset content, reported with a 1-based line number.
    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    /// Score outside its declared range, label outside 0..K, and similar.
    #[error("validation error: {0}")]
    Validation(String),

    /// Precondition violation on an operation argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tensor shape does not conform for a primitive.
    #[error("shape mismatch in {op}: lhs {lhs:?}, rhs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// Vocabulary index outside the embedding table.
    #[error("vocabulary index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    /// A class without training samples has no defined loss weight.
    #[error("class {class} has no samples; class weight undefined")]
    EmptyClass { class: usize },

    /// Training diverged (non-finite loss).
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    /// A gradient went non-finite during optimization.
    #[error("non-finite gradient for parameter {name}")]
    NonFiniteGradient { name: String },

    /// Model archive is unreadable or has the wrong version.
    #[error("archive error: {0}")]
    Archive(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 config, 2 data, 3 training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Diverged { .. } | Error::NonFiniteGradient { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
