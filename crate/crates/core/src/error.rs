use thiserror::Error;

use crate::event::Timestamp;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel ({u}, {v}) is outside the {width}x{height} sensor")]
    OutOfBounds {
        u: i64,
        v: i64,
        width: u32,
        height: u32,
    },

    /// An event or update arrived with a timestamp older than one already
    /// applied.
    #[error("timestamp {t} us precedes the last applied timestamp {last} us")]
    StreamOrder { t: Timestamp, last: Timestamp },

    #[error("no feature available")]
    NoFeature,

    #[error("need at least {needed} features, got {got}")]
    NotEnoughFeatures { needed: usize, got: usize },

    #[error("point lies behind the camera")]
    BehindCamera,

    #[error("trajectory times must strictly increase ({prev} us then {next} us)")]
    Trajectory { prev: Timestamp, next: Timestamp },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
