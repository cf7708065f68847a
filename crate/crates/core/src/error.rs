use thiserror::Error;

/// Errors raised by model construction, information computations and bounds.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incompatible alphabets: {0}")]
    IncompatibleAlphabet(String),

    #[error("enumeration of {size} cells exceeds the cap of {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("operation requires finite alphabets, got a continuous {0}")]
    ContinuousAlphabet(&'static str),

    #[error("unsupported model/prior pairing: {0}")]
    Unsupported(String),

    #[error("worst-case mutual information is zero for i = {i}; the sufficiency bound is vacuous")]
    ZeroInformation { i: usize },

    #[error("mutual information is zero for i = {i}; recovery is impossible at any sample size")]
    InfiniteThreshold { i: usize },

    #[error("no finite sample threshold exists: {0}")]
    NoFiniteThreshold(String),

    #[error("side condition I >= K/(T p_min) fails for i = {i}: I = {mi:.6e}, K/(T p_min) = {penalty:.6e}")]
    SideConditionFailed { i: usize, mi: f64, penalty: f64 },

    #[error("quadrature did not converge: discrepancy {discrepancy:.3e} at order {order}")]
    QuadratureNotConverged { discrepancy: f64, order: usize },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
