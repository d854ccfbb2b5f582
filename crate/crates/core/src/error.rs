use alloc::string::String;

use crate::mapping::Space;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("record `{record}` is missing sub-condition `{field}`")]
    MissingSubCondition { record: String, field: String },

    #[error("unknown sub-condition `{0}`")]
    UnknownSubCondition(String),

    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{what}: index {index} out of range for size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty token list for text sub-condition `{0}`")]
    EmptyTokens(String),

    #[error("value kind does not match sub-condition `{0}`")]
    KindMismatch(String),

    #[error("latent space mismatch: expected {expected:?}, got {actual:?}")]
    SpaceMismatch { expected: Space, actual: Space },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("covariance has eigenvalue {0:e} below tolerance")]
    CorruptCovariance(f64),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("optimization diverged at step {0}")]
    Diverged(usize),
}

impl Error {
    /// Numeric failures (as opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::Factorization(_)
                | Error::CorruptCovariance(_)
                | Error::Degenerate(_)
                | Error::Diverged(_)
        )
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { what, expected, actual });
    }
    Ok(())
}

pub(crate) fn check_finite(what: &'static str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
