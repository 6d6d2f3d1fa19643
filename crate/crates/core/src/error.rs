use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("game with {n} players exceeds the limit of {cap}")]
    TooManyPlayers { n: usize, cap: usize },

    #[error("dense game with {n} players needs {expected} values, got {got}")]
    TableSize { n: usize, expected: usize, got: usize },

    #[error("player set {bits:#b} has members outside 0..{n}")]
    PlayerOutOfRange { bits: u64, n: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("coalition {sub:#b} is not contained in block {block} ({block_bits:#b})")]
    NotInBlock { sub: u64, block: usize, block_bits: u64 },

    #[error("intermediate game needs a nonempty coalition")]
    EmptyCoalition,

    #[error("{carrier:#b} is not a carrier: v({witness:#b}) != v({witness:#b} & {carrier:#b})")]
    NotACarrier { carrier: u64, witness: u64 },

    #[error("value is not linear: deviation {deviation:e} on basis game {basis:#b}")]
    NotLinear { deviation: f64, basis: u64 },

    #[error("invalid coalitional value spec: {0}")]
    InvalidSpec(String),

    #[error("invalid partition tree: {0}")]
    InvalidTree(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model oracle failed: {0}")]
    Oracle(String),

    #[error("model oracle protocol violation at response line {line}: {message}")]
    OracleProtocol { line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
