use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    /// A field of a game, observation set or dataset violates its invariant.
    #[error("game {game_id}: invalid {field}: {reason}")]
    InvalidGame {
        game_id: String,
        field: &'static str,
        reason: String,
    },
    #[error("duplicate game id {0}")]
    DuplicateGameId(String),
    #[error("index {index} out of range for {what} of size {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid probability vector: {0}")]
    InvalidStrategy(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("feature {0} is not valid here: {1}")]
    WrongFeatureVariant(String, &'static str),
    #[error("normalized activation requires nonnegative values, got {0}")]
    NegativeActivation(f64),
    #[error("model kind mismatch: expected {expected}, got {got}")]
    ModelKindMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn game(game_id: &str, field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidGame {
            game_id: game_id.to_string(),
            field,
            reason: reason.into(),
        }
    }

    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
