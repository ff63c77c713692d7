use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("atom number must be in 1..={max}, got {got}")]
    AtomNumber { got: usize, max: usize },

    #[error("state is not normalized: norm = {0:e}")]
    NotNormalized(f64),

    #[error("expected {expected} amplitudes, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("mean spin vanishes; the Wineland parameter is undefined ({0})")]
    ZeroMeanSpin(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("singular detuning: {0} is zero")]
    SingularDetuning(&'static str),

    #[error("step too large: dt * max(|Delta|, |Delta_p|) = {0} exceeds 0.1")]
    StepTooLarge(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("outcome n_m = {0} has zero probability")]
    ZeroProbability(u64),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("no cat structure: {0}")]
    NotACat(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
