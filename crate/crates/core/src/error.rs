use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular basis (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("point count exceeds the enumeration cap of {cap}")]
    EnumerationCap { cap: usize },

    #[error("invalid nesting: {0}")]
    InvalidNesting(String),

    #[error("no similar sublattice at this scale: {0}")]
    NoSimilarSublattice(String),

    #[error("coset index {index} out of range [0, {n})")]
    IndexOutOfRange { index: u64, n: u64 },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown lattice tag `{0}`")]
    UnknownLattice(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by user input rather than by a failed construction.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse(_) | Error::InvalidArgument(_) | Error::UnknownLattice(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
