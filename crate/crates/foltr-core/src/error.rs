//! Error type shared by all simulation modules.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed dataset line; `line` is 1-based.
    Parse { line: usize, reason: String },
    /// Dataset has no documents at all.
    EmptyDataset,
    /// Vector length does not match what the model or rule expects.
    DimensionMismatch { expected: usize, got: usize },
    /// Relevance grade outside `[0, grade_levels)`.
    GradeOutOfRange { grade: u8, levels: u8 },
    /// Train/test split needs at least two queries.
    NotEnoughQueries { have: usize },
    /// Test fraction must lie strictly between 0 and 1.
    InvalidFraction { fraction: f64 },
    /// A score or parameter became non-finite.
    NonFinite,
    /// Aggregation called with no client updates.
    NoUpdates,
    /// Krum-family rules need `n >= m + 3` vectors.
    TooFewClients { n: usize, required: usize },
    /// Trimmed mean needs `n - 2*beta >= 1`.
    TrimTooLarge { n: usize, beta: usize },
    /// Threat model, aggregator or run configuration is inconsistent.
    InvalidConfig(String),
    /// A client was given an empty query pool.
    EmptyQueryPool,
    /// Attack crafting called with zero attackers.
    NoAttackers,
    /// Error raised inside federated round `round`.
    InRound { round: u64, source: Box<Error> },
}

impl Error {
    pub(crate) fn in_round(self, round: u64) -> Error {
        Error::InRound {
            round,
            source: Box::new(self),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, reason } => write!(f, "parse error at line {line}: {reason}"),
            Error::EmptyDataset => write!(f, "dataset contains no documents"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::GradeOutOfRange { grade, levels } => {
                write!(f, "relevance grade {grade} outside 0..{levels}")
            }
            Error::NotEnoughQueries { have } => {
                write!(f, "need at least 2 queries to split, have {have}")
            }
            Error::InvalidFraction { fraction } => {
                write!(f, "test fraction {fraction} not in (0, 1)")
            }
            Error::NonFinite => write!(f, "non-finite value encountered"),
            Error::NoUpdates => write!(f, "no client updates to aggregate"),
            Error::TooFewClients { n, required } => {
                write!(f, "rule needs at least {required} clients, got {n}")
            }
            Error::TrimTooLarge { n, beta } => {
                write!(f, "cannot trim {beta} from each side of {n} values")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EmptyQueryPool => write!(f, "client has no queries to sample from"),
            Error::NoAttackers => write!(f, "attack crafting requires at least one attacker"),
            Error::InRound { round, source } => write!(f, "round {round}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::InRound { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
