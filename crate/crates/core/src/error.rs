use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid error parameters: {0}")]
    InvalidParams(String),

    #[error("invalid drift spec (mean {mean}, std {std}): {reason}")]
    InvalidDriftSpec { mean: f64, std: f64, reason: String },

    #[error("beta fit failed: {0}")]
    Fit(String),

    #[error("register size {0} outside supported range 1..=12")]
    RegisterSize(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n}-qubit register")]
    QubitIndex { index: usize, n: usize },

    #[error("invalid counts: {0}")]
    Counts(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid chain configuration: {0}")]
    ChainConfig(String),

    #[error("initial state outside sampler support: {0:?}")]
    InitOutsideSupport([f64; 3]),

    #[error("empty chain")]
    EmptyChain,

    #[error("readout matrix for qubit {qubit} is singular (e0 + e1 = {sum})")]
    MitigationSingular { qubit: usize, sum: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    InRun { context: String, source: Box<Error> },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error stems from user configuration rather than a
    /// failure while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidDriftSpec { .. }
                | Error::RegisterSize(_)
                | Error::ChainConfig(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
