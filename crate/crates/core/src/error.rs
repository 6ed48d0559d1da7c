use thiserror::Error;

use crate::calibration::CalibStepRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("visibility undefined: no counts in either port")]
    UndefinedVisibility,

    #[error("range error: {0}")]
    Range(String),

    #[error("ambiguous phase: least-squares objective is flat")]
    AmbiguousPhase,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration of delay {delay_index} aborted at step {step}: {reason}")]
    CalibrationAborted {
        delay_index: u8,
        step: u8,
        reason: String,
        partial_trace: Vec<CalibStepRecord>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
