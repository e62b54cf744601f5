use thiserror::Error;

/// Errors raised by the calculators and simulators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoordError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("population is empty")]
    EmptyPopulation,

    #[error("population needs at least {needed} agents, got {got}")]
    TooFewAgents { needed: usize, got: usize },

    #[error("agent model length mismatch: expected {expected}, got {got}")]
    ModelLengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("cell ({x}, {y}) lies outside the {width}x{height} lattice")]
    SeedOutsideLattice {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("enumeration of {count} profiles exceeds the cap of {cap}")]
    InstanceTooLarge { count: u128, cap: u128 },

    #[error("io error: {0}")]
    Io(String),
}

impl CoordError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CoordError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for CoordError {
    fn from(e: std::io::Error) -> Self {
        CoordError::Io(e.to_string())
    }
}

impl From<csv::Error> for CoordError {
    fn from(e: csv::Error) -> Self {
        CoordError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoordError>;
