use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its documented range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An operation received an argument outside its mathematical domain.
    #[error("{what} must be non-negative and finite, got {value}")]
    Domain { what: &'static str, value: f64 },

    /// The current is too close to the saturation ceiling to be inverted.
    #[error(
        "detector oversaturated: current {current:.6e} A is within the guard band of I_max = {i_max:.6e} A; \
         the phase cannot be extracted"
    )]
    Oversaturated { current: f64, i_max: f64 },

    #[error("signal amplitude is zero; the phase is not defined")]
    DegenerateSignal,

    #[error("true phase is zero; the error ratio is undefined")]
    UndefinedRatio,

    /// cos(chi - phi) vanishes and the propagated precision diverges.
    #[error("precision diverges at chi - phi = {offset} (cos = 0)")]
    DivergentPrecision { offset: f64 },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
}
