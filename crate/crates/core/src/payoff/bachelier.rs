//! Call on an arithmetic Brownian motion maturing `dt_offset` after the horizon.

use crate::error::{check_time, HedgeError, Result};
use crate::market::{Exposure, ModelParams};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallCurve {
    pub n_options: f64,
    pub strike: f64,
    pub dt_offset: f64,
    pub beta: f64,
    pub eta: f64,
    pub horizon: f64,
}

impl CallCurve {
    pub fn new(params: &ModelParams, n_options: f64, strike: f64, dt_offset: f64) -> Self {
        Self {
            n_options,
            strike,
            dt_offset,
            beta: params.beta,
            eta: params.eta,
            horizon: params.horizon,
        }
    }

    fn remaining(&self, t: f64) -> f64 {
        (self.horizon + self.dt_offset - t).max(0.0)
    }

    /// `(moneyness z, sd)` at `(t,u)`; `sd = 0` marks the degenerate law.
    fn standardize(&self, t: f64, u: f64) -> (f64, f64) {
        let tau = self.remaining(t);
        let sd = self.eta * tau.sqrt();
        let fwd = u + self.beta * tau - self.strike;
        if sd == 0.0 {
            (fwd, 0.0)
        } else {
            (fwd / sd, sd)
        }
    }

    pub fn value(&self, t: f64, u: f64) -> f64 {
        let (z, sd) = self.standardize(t, u);
        if sd == 0.0 {
            return self.n_options * z.max(0.0);
        }
        self.n_options * sd * (z * normal::cdf(z) + normal::pdf(z))
    }

    pub fn delta(&self, t: f64, u: f64) -> f64 {
        let (z, sd) = self.standardize(t, u);
        if sd == 0.0 {
            return if z > 0.0 { self.n_options } else { 0.0 };
        }
        self.n_options * normal::cdf(z)
    }

    pub fn gamma(&self, t: f64, u: f64) -> f64 {
        let (z, sd) = self.standardize(t, u);
        if sd == 0.0 {
            return 0.0;
        }
        self.n_options * normal::pdf(z) / sd
    }

    /// Scale `η·sqrt(T + δt − s)` over which the delta at time `s` rises from 0 to `N`.
    pub fn transition_width(&self, s: f64) -> f64 {
        self.eta * self.remaining(s).sqrt()
    }

    /// Level of `u` at which the delta at time `s` is `N/2`.
    pub fn steep_point(&self, s: f64) -> f64 {
        self.strike - self.beta * self.remaining(s)
    }
}

fn curve_for(params: &ModelParams, exposure: &Exposure, t: f64) -> Result<(CallCurve, f64)> {
    params.validate()?;
    exposure.validate()?;
    let t = check_time(t, f64::NEG_INFINITY, params.horizon)?;
    match exposure {
        Exposure::BachelierCall {
            n_options,
            strike,
            dt_offset,
        } => Ok((CallCurve::new(params, *n_options, *strike, *dt_offset), t)),
        _ => Err(HedgeError::InvalidParameter {
            name: "exposure",
            reason: "expected a bachelier_call exposure".into(),
        }),
    }
}

/// Call value `N·sd·(zΦ(z) + φ(z))` with `sd = η·sqrt(T + δt − t)`.
pub fn call_value(params: &ModelParams, exposure: &Exposure, t: f64, u: f64) -> Result<f64> {
    let (c, t) = curve_for(params, exposure, t)?;
    Ok(c.value(t, u))
}

/// Call delta `N·Φ(z)`.
pub fn call_delta(params: &ModelParams, exposure: &Exposure, t: f64, u: f64) -> Result<f64> {
    let (c, t) = curve_for(params, exposure, t)?;
    Ok(c.delta(t, u))
}
