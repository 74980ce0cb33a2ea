use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite field ({context}) at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    DerivativeOrder(u32),

    #[error("degenerate wavefunction: max |psi| is zero")]
    DegenerateWavefunction,

    #[error("channel count {0} exceeds quaternion units (at most 3 environment channels)")]
    TooManyChannels(usize),

    #[error("configuration error in `{param}`: {message}")]
    Config { param: String, message: String },

    #[error("field blow-up at step {step}: {reason}")]
    BlowUp { step: usize, reason: String },
}

impl Error {
    pub fn config(param: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            param: param.into(),
            message: message.into(),
        }
    }
}

/// Abnormal termination of a time integration, carrying everything computed
/// up to (and including) the last finite state.
#[derive(Debug, Clone)]
pub struct BlowUp<T> {
    pub step: usize,
    pub reason: String,
    pub partial: T,
}

impl<T: std::fmt::Debug> std::fmt::Display for BlowUp<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "blow-up at step {}: {}", self.step, self.reason)
    }
}

impl<T: std::fmt::Debug> std::error::Error for BlowUp<T> {}

/// Failure of a configured run: rejected before starting, or aborted midway.
#[derive(Debug, Clone)]
pub enum RunError<T> {
    Invalid(Error),
    BlowUp(BlowUp<T>),
}

impl<T> From<Error> for RunError<T> {
    fn from(e: Error) -> Self {
        RunError::Invalid(e)
    }
}

impl<T: std::fmt::Debug> std::fmt::Display for RunError<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(e) => e.fmt(f),
            RunError::BlowUp(b) => b.fmt(f),
        }
    }
}

impl<T: std::fmt::Debug> std::error::Error for RunError<T> {}
