use thiserror::Error;

/// Errors raised by model construction and analysis.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid value vector: {0}")]
    InvalidValues(String),

    #[error("invalid value distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid signaling policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid utility rule: {0}")]
    InvalidRule(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("agent index {agent} out of range for {n_agents} agents")]
    AgentOutOfRange { agent: usize, n_agents: usize },

    #[error("{what} of size {size} exceeds the enumeration cap {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u64 },

    #[error("optimal welfare is zero; ratio is undefined")]
    ZeroOptimalWelfare,

    #[error("undefined ratio: {0} has a zero denominator")]
    UndefinedRatio(&'static str),

    #[error("bad parameters: {0}")]
    BadParams(String),
}

impl CoverError {
    /// Broad class of the failure, used to pick process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            CoverError::CapExceeded { .. } => ErrorKind::Cap,
            CoverError::BadParams(_) => ErrorKind::BadParams,
            _ => ErrorKind::Invariant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invariant,
    Cap,
    BadParams,
}

pub type Result<T, E = CoverError> = std::result::Result<T, E>;
