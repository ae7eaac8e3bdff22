use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed MIDI data at byte offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("track contains no note events")]
    EmptyTrack,

    #[error("unsupported time signature {numerator}/{denominator}")]
    UnsupportedMeter { numerator: u8, denominator: u8 },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("batch too small: {0}")]
    BatchTooSmall(String),

    #[error("embedding is degenerate (zero norm)")]
    DegenerateEmbedding,

    #[error("distribution is degenerate (zero variance)")]
    DegenerateDistribution,

    #[error("encoder has not been trained")]
    UntrainedEncoder,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing prerequisite stage: {0}")]
    Dependency(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(offset: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            reason: reason.into(),
        }
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
