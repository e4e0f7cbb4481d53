//! Error types shared across the crate.

use std::fmt;

/// Power-allocation constraint identifiers, used when an allocation is
/// rejected so callers can tell which bound was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerConstraint {
    /// sigma_u2 + sigma_k2 <= p_budget
    Budget,
    /// sigma_u2 >= 0
    SignalNonNegative,
    /// sigma_k2 >= 0
    NoranNonNegative,
}

impl fmt::Display for PowerConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerConstraint::Budget => write!(f, "total power budget (sigma_u2 + sigma_k2 <= P)"),
            PowerConstraint::SignalNonNegative => write!(f, "signal power nonnegativity (sigma_u2 >= 0)"),
            PowerConstraint::NoranNonNegative => write!(f, "noise power nonnegativity (sigma_k2 >= 0)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidArgument(String),
    /// The channel admits no valid precoder (e.g. all-zero matrix).
    NoValidPrecoder,
    /// The channel has no nontrivial null space at these dimensions.
    NoNullSpace { n_rx: usize, n_tx: usize },
    /// A power allocation violates one of the feasibility constraints.
    ConstraintViolation {
        constraint: PowerConstraint,
        sigma_u2: f64,
        sigma_k2: f64,
        p_budget: f64,
    },
    /// A solver produced a non-finite value.
    NumericalFailure(String),
    /// Two distinct quantized CSI vectors hashed to the same codebook key.
    KeyCollision {
        key64: u64,
        existing: Vec<(i64, i64)>,
        incoming: Vec<(i64, i64)>,
    },
    /// A codebook file declares a format version this build does not read.
    UnsupportedVersion { found: u64, supported: u64 },
    /// A file failed to parse; the message carries line/offset context.
    Parse(String),
    /// An I/O operation failed; the message carries the path.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NoValidPrecoder => write!(f, "no valid precoder: channel gain is zero"),
            Error::NoNullSpace { n_rx, n_tx } => write!(
                f,
                "no null space for a {n_rx}x{n_tx} channel: requires more transmit than receive antennas"
            ),
            Error::ConstraintViolation {
                constraint,
                sigma_u2,
                sigma_k2,
                p_budget,
            } => write!(
                f,
                "allocation (sigma_u2={sigma_u2}, sigma_k2={sigma_k2}, P={p_budget}) violates {constraint}"
            ),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::KeyCollision {
                key64,
                existing,
                incoming,
            } => write!(
                f,
                "codebook key collision on {key64}: existing quantized CSI {existing:?} vs incoming {incoming:?}"
            ),
            Error::UnsupportedVersion { found, supported } => {
                write!(f, "unsupported codebook version {found} (this build reads version {supported})")
            }
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
