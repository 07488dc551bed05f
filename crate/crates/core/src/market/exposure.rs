use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};

/// Default maturity offset of the call beyond the trading horizon.
pub const DEFAULT_DT_OFFSET: f64 = 1e-5;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Terminal exposure `ψ(U_T)` to the non-tradable factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Exposure {
    /// `units` frozen shares of `U`.
    Linear { units: f64 },
    /// `n_options` calls struck at `strike` maturing `dt_offset` after the horizon.
    BachelierCall {
        n_options: f64,
        strike: f64,
        #[serde(default = "default_dt_offset")]
        dt_offset: f64,
    },
    /// Caller-supplied payoff with bounded derivatives up to fourth order.
    #[serde(skip)]
    CustomSmooth(CustomPayoff),
}

fn default_dt_offset() -> f64 {
    DEFAULT_DT_OFFSET
}

/// A smooth payoff supplied by the caller.
///
/// `fourth_derivative_bound` is trusted, not checked; it is kept so quadrature
/// tolerances can be reported relative to it. `features` lists abscissae where
/// the payoff varies quickly (used as quadrature breakpoints).
#[derive(Clone)]
pub struct CustomPayoff {
    pub name: String,
    pub payoff: ScalarFn,
    pub derivative: Option<ScalarFn>,
    pub fourth_derivative_bound: f64,
    pub features: Vec<f64>,
}

impl CustomPayoff {
    pub fn new<F>(name: impl Into<String>, payoff: F, fourth_derivative_bound: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            payoff: Arc::new(payoff),
            derivative: None,
            fourth_derivative_bound,
            features: Vec::new(),
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = features;
        self
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.payoff)(u)
    }
}

impl fmt::Debug for CustomPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPayoff")
            .field("name", &self.name)
            .field("has_derivative", &self.derivative.is_some())
            .field("fourth_derivative_bound", &self.fourth_derivative_bound)
            .field("features", &self.features)
            .finish()
    }
}

impl Exposure {
    pub fn linear(units: f64) -> Self {
        Exposure::Linear { units }
    }

    pub fn call(n_options: f64, strike: f64) -> Self {
        Exposure::BachelierCall {
            n_options,
            strike,
            dt_offset: DEFAULT_DT_OFFSET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Exposure::Linear { units } if !units.is_finite() => Err(HedgeError::InvalidParameter {
                name: "units",
                reason: "must be finite".into(),
            }),
            Exposure::BachelierCall {
                n_options,
                strike,
                dt_offset,
            } => {
                if !(n_options.is_finite() && strike.is_finite()) {
                    return Err(HedgeError::InvalidParameter {
                        name: "n_options/strike",
                        reason: "must be finite".into(),
                    });
                }
                if !(*dt_offset > 0.0 && dt_offset.is_finite()) {
                    return Err(HedgeError::InvalidParameter {
                        name: "dt_offset",
                        reason: format!("call maturity offset must be > 0, got {dt_offset}"),
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Raw terminal payoff `ψ(u)`. For the call this is the intrinsic value.
    pub fn payoff(&self, u: f64) -> f64 {
        match self {
            Exposure::Linear { units } => units * u,
            Exposure::BachelierCall {
                n_options, strike, ..
            } => n_options * (u - strike).max(0.0),
            Exposure::CustomSmooth(p) => p.eval(u),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Exposure::Linear { .. })
    }
}
