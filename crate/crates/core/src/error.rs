use thiserror::Error;

/// Errors raised by model construction, coefficient evaluation and simulation.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum HedgeError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("time {t} outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined limit: {0}")]
    UndefinedLimit(String),

    #[error("strategy returned non-finite speed {speed} at step {step} (t={t}, q={q}, u={u})")]
    NonFiniteSpeed {
        step: usize,
        t: f64,
        q: f64,
        u: f64,
        speed: f64,
    },

    #[error("non-finite value during integration at t={t}")]
    OdeBlowup { t: f64 },

    #[error("non-finite integrand value at x={x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("utility overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, HedgeError>;

/// Slack allowed when a caller passes a time computed by floating-point
/// arithmetic that should sit on an interval endpoint.
pub(crate) const TIME_SLACK: f64 = 1e-12;

/// Validates `t ∈ [lo, hi]` with a relative slack and returns it clamped.
pub(crate) fn check_time(t: f64, lo: f64, hi: f64) -> Result<f64> {
    let slack = TIME_SLACK * hi.abs().max(1.0);
    if !t.is_finite() || t < lo - slack || t > hi + slack {
        return Err(HedgeError::TimeOutOfRange { t, lo, hi });
    }
    Ok(t.clamp(lo, hi))
}
