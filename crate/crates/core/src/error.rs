use std::path::PathBuf;

use crate::compressors::CodecId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("codec {0} cannot be used here")]
    WrongCodecFamily(CodecId),

    #[error("codec {codec} failed on {ids}: {message}")]
    CodecError {
        codec: CodecId,
        ids: String,
        message: String,
    },

    #[error("pair ({row}, {col}): {source}")]
    Pair {
        row: String,
        col: String,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least 2 references for row statistics, got {0}")]
    InsufficientReferences(usize),

    #[error("no row statistics for object {0}")]
    MissingStats(String),

    #[error("expected a {expected} matrix, found {found}")]
    MeasureMismatch { expected: String, found: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionError { left: usize, right: usize },

    #[error("invalid class partition: {0}")]
    InvalidPartition(String),

    #[error("invalid distance at {index}: {value}")]
    InvalidDistance { index: usize, value: f64 },

    #[error("need at least 3 leaves to enumerate partitions, got {0}")]
    TooFewLeaves(usize),

    #[error("silhouette is undefined for a single cluster")]
    UndefinedSilhouette,

    #[error("requested {requested} items from a set of {available}")]
    InvalidCount { requested: usize, available: usize },

    #[error("sample row is missing a distance to {0}")]
    IncompleteRow(String),

    #[error("class {class} has {size} samples, need at least {required}")]
    ClassTooSmall {
        class: String,
        size: usize,
        required: usize,
    },

    #[error("invalid fold: {0}")]
    InvalidFold(String),

    #[error("training labels contain a single class")]
    DegenerateLabels,

    #[error("file {0} has no fragments")]
    MissingFragments(String),

    #[error("class directory {} is empty", .0.display())]
    EmptyClass(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("fold {index}: {source}")]
    Fold {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::WrongCodecFamily(_) => "WrongCodecFamily",
            Error::CodecError { .. } => "CodecError",
            Error::Pair { source, .. } | Error::Fold { source, .. } => source.kind(),
            Error::InsufficientReferences(_) => "InsufficientReferences",
            Error::MissingStats(_) => "MissingStats",
            Error::MeasureMismatch { .. } => "MeasureMismatch",
            Error::DimensionError { .. } => "DimensionError",
            Error::InvalidPartition(_) => "InvalidPartition",
            Error::InvalidDistance { .. } => "InvalidDistance",
            Error::TooFewLeaves(_) => "TooFewLeaves",
            Error::UndefinedSilhouette => "UndefinedSilhouette",
            Error::InvalidCount { .. } => "InvalidCount",
            Error::IncompleteRow(_) => "IncompleteRow",
            Error::ClassTooSmall { .. } => "ClassTooSmall",
            Error::InvalidFold(_) => "InvalidFold",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::MissingFragments(_) => "MissingFragments",
            Error::EmptyClass(_) => "EmptyClass",
            Error::Io { .. } => "IoError",
            Error::Parse(_) => "ParseError",
        }
    }
}
