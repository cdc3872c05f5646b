use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no sign change of the function on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error(
        "quadrature budget exhausted after {subdivisions} subdivisions \
         (error estimate {error:e}, target {target:e})"
    )]
    BudgetExhausted {
        subdivisions: usize,
        error: f64,
        target: f64,
    },

    #[error("degenerate pole near {at}: derivative {derivative:e} is below the degeneracy floor")]
    DegeneratePole { at: f64, derivative: f64 },

    #[error("principal-value windows around {left} and {right} overlap (half-width {delta})")]
    WindowOverlap { left: f64, right: f64, delta: f64 },

    #[error("detectors coincide: zero separation with identical trajectories")]
    CoincidentDetectors,

    #[error("synchronized pair requires equal angular velocities, got {omega_a} and {omega_b}")]
    AngularVelocityMismatch { omega_a: f64, omega_b: f64 },

    #[error("negative transition probability {value:e} (upstream quadrature failure?)")]
    NegativeProbability { value: f64 },

    #[error("epsilon extrapolation unstable: extrapolants differ by {spread:e}, last increment {increment:e}")]
    ExtrapolationUnstable { spread: f64, increment: f64 },

    #[error("predicate takes the same value at both ends of [{lo}, {hi}]")]
    NoTransitionInInterval { lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}
