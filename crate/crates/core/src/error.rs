use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("malformed rational `{0}`")]
    Rational(String),
    #[error("malformed number `{0}`")]
    Number(String),
    #[error("malformed state key `{0}`")]
    StateKey(String),
    #[error("{0}")]
    Schema(String),
}

/// Failures of the joint state process.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("malformed distribution: {0}")]
    Malformed(String),
    #[error("probability of state {state} is outside [0,1]")]
    ProbabilityOutOfRange { state: String },
    #[error("probability mass sums to {total}, not 1")]
    MassDeficit { total: String },
    #[error("subcarrier {subcarrier} has marginal {marginal}, expected {expected}")]
    MarginalMismatch {
        subcarrier: usize,
        marginal: String,
        expected: String,
    },
    #[error("fractional partition is undefined for p = 0")]
    UndefinedPartition,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("shift {shift} out of range for q = {q}")]
    ShiftOutOfRange { q: usize, shift: usize },
    #[error("level vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(u32, u32),
    #[error("{0} is not a usable prime field order")]
    NotPrime(u32),
    #[error("expected inputs for {expected} subcarriers, got {got}")]
    SubcarrierCount { expected: usize, got: usize },
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdsError {
    #[error("need {needed} combinations, received {received}")]
    Insufficient { needed: usize, received: usize },
    #[error("evaluation point {0} repeated; Vandermonde system is singular")]
    Singular(u32),
    #[error("{count} combinations do not fit in a field of order {modulus}")]
    FieldTooSmall { count: usize, modulus: u32 },
}

/// Decode trace attached to an aborted trial.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub slot: u64,
    pub user: usize,
    pub detail: String,
}

impl std::fmt::Display for DecodeTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "slot {} user {}: {}", self.slot, self.user + 1, self.detail)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("decode failure at {0}")]
    DecodeFailure(DecodeTrace),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Mds(#[from] MdsError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
