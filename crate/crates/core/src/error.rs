use alloc::boxed::Box;
use alloc::string::String;

use crate::linalg::EigPair;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty signal")]
    EmptySignal,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("singular linear system")]
    Singular,
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<EigPair>,
    },
    #[error("channel {index} out of range for {channels} channels")]
    ChannelOutOfRange { index: usize, channels: usize },
    #[error("room too absorbent for target RT60: required absorption {alpha:.4} > 1")]
    InfeasibleAbsorption { alpha: f64 },
    #[error("no valid source/microphone placement after {retries} retries")]
    InfeasibleGeometry { retries: usize },
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    RateMismatch { expected: u32, found: u32 },
    #[error("cannot set SNR: {0} signal is silent")]
    SilentSignal(&'static str),
    #[error("trial set needs at least one target and one nontarget")]
    SingleClass,
    #[error("clip too short: {frames} frames, need more than {required}")]
    ClipTooShort { frames: usize, required: usize },
    #[error("{stage} stage failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
