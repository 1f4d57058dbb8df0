use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("array values must be finite")]
    NonFiniteValue,

    #[error("non-finite intermediate in `{op}` (node {node})")]
    NonFiniteIntermediate { op: &'static str, node: usize },

    #[error("leaf `{0}` is not bound")]
    UnboundLeaf(String),

    #[error("graph has no leaf named `{0}`")]
    UnknownLeaf(String),

    #[error("duplicate leaf name `{0}`")]
    DuplicateLeaf(String),

    #[error("gradient requires a scalar output, got shape {0:?}")]
    NonScalarOutput(Vec<usize>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty {0}")]
    EmptyInput(&'static str),

    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: i64, k: usize },

    #[error("degenerate input: pre-normalization vector has near-zero norm")]
    DegenerateEmbedding,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format version `{0}`")]
    UnsupportedVersion(String),

    #[error("non-finite value in loss component `{0}`")]
    NonFiniteLoss(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
