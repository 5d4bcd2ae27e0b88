use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pump grid does not cover detuning sum {required:.6} (pump window [{min:.6}, {max:.6}])")]
    Coverage { required: f64, min: f64, max: f64 },

    #[error("generator is singular or unstable: pump at or above threshold ({0})")]
    AtOrAboveThreshold(String),

    #[error("decomposition unreliable: residual {residual:.3e} exceeds gate {gate:.3e}")]
    DecompositionUnreliable { residual: f64, gate: f64 },

    #[error("effective mode number undefined: no pair generation (all squeezing amplitudes zero)")]
    UndefinedModeNumber,

    #[error("ambiguous FWHM: half-maximum level crossed {} times", crossings.len())]
    AmbiguousFwhm { crossings: Vec<f64> },

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown power definition `{0}` (expected `peak` or `energy`)")]
    UnknownPowerDefinition(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
