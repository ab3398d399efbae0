use thiserror::Error;

/// Broad classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters supplied by the caller.
    Usage,
    /// Input data violates a schema or invariant.
    Data,
    /// A computation is undefined for the given data.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}: price {price} for {ticker} is not strictly positive")]
    NonPositivePrice { row: usize, ticker: String, price: f64 },
    #[error("row {row}: duplicate observation for ({date}, {ticker})")]
    DuplicateObservation { row: usize, date: String, ticker: String },
    #[error("need at least {needed} dates, panel has {found}")]
    TooFewDates { needed: usize, found: usize },
    #[error("panel is already lag-expanded")]
    AlreadyExpanded,
    #[error("panel must be lag-expanded (2N variables)")]
    NotExpanded,
    #[error("variable {variable} has zero variance; correlation is undefined")]
    ZeroVariance { variable: String },
    #[error("sequence lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("self-transfer of {variable} is zero; cannot normalize")]
    ZeroSelfTransfer { variable: String },
    #[error("ticker {ticker} has no taxonomy entry")]
    MissingTaxonomy { ticker: String },
    #[error("sector {sector} has {count} usable member(s); at least 2 required")]
    SmallSector { sector: String, count: usize },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable sets differ")]
    VariableMismatch,
    #[error("shock origin set is empty")]
    EmptyShockSet,
    #[error("stress undefined: all target distances are zero but the embedding is not")]
    DegenerateStress,
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } => ErrorKind::Usage,
            Error::ZeroVariance { .. }
            | Error::ZeroSelfTransfer { .. }
            | Error::DegenerateStress => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter { name, message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
