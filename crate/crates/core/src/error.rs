use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid qubit subset: {0}")]
    InvalidSubset(String),

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("cannot combine a pure state with a density operator")]
    MixedKinds,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} is capped at {cap} qubits, requested {requested}")]
    CapExceeded {
        what: &'static str,
        cap: usize,
        requested: usize,
    },

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("not enough samples: {0}")]
    InsufficientData(String),

    #[error("rank-deficient measurement frame (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
