use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled in the past: requested t={requested}s while clock is at {now}s")]
    Causality { now: f64, requested: f64 },

    #[error("invalid uniform_int range: lo={lo} > hi={hi}")]
    EmptyRange { lo: i64, hi: i64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("BER curve line {line}: {reason}")]
    BerCurve { line: usize, reason: String },

    #[error("scenario line {line}: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("unknown scenario preset `{0}`")]
    UnknownPreset(String),

    #[error("run failed (seed {seed}, sweep point {point}): {source}")]
    Run {
        seed: u64,
        point: String,
        #[source]
        source: Box<SimError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidParam {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
