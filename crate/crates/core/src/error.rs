use thiserror::Error;

/// Errors produced by the channel, receiver and link-budget routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("model mismatch: precoder is {precoder:?} but channel is {channel:?}")]
    ModelMismatch {
        precoder: crate::channel::ChannelModel,
        channel: crate::channel::ChannelModel,
    },

    #[error("matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("required SNR {required_db:.4} dB lies outside table span [{min_db:.4}, {max_db:.4}] dB")]
    OutOfRange {
        required_db: f64,
        min_db: f64,
        max_db: f64,
    },

    #[error("table format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
