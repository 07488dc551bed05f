//! Conditional expectations along the uncontrolled factor `dŨ = β dt + η dZ`.
//!
//! `g(t,U) = E[ψ(Ũ_T) | Ũ_t = U]` and its first two `U`-derivatives drive the
//! expansion coefficients and both approximate strategies. The call has closed
//! forms; other payoffs go through quadrature against the Gaussian transition
//! law.

mod bachelier;

pub use bachelier::{call_delta, call_value, CallCurve};

use std::sync::Arc;

use crate::error::{check_time, HedgeError, Result};
use crate::market::{CustomPayoff, Exposure, ModelParams};
use crate::normal;
use crate::quadrature::{integrate, HermiteRule, Tolerance};

/// Default node count of the Gauss–Hermite rule.
pub const DEFAULT_HERMITE_NODES: usize = 128;

/// Standard-normal truncation used by the adaptive expectation.
const TAIL: f64 = 12.0;

/// Law of the uncontrolled arithmetic Brownian motion `Ũ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryProcessLaw {
    pub beta: f64,
    pub eta: f64,
}

/// How a Gaussian expectation is evaluated.
#[derive(Debug, Clone)]
pub enum ExpectationMethod {
    Hermite(Arc<HermiteRule>),
    /// Adaptive Gauss–Kronrod in the standardized variable, split at the given
    /// points of the original variable.
    Adaptive {
        tol: Tolerance,
        breakpoints: Vec<f64>,
    },
}

impl ExpectationMethod {
    pub fn hermite(n: usize) -> Self {
        ExpectationMethod::Hermite(Arc::new(HermiteRule::new(n)))
    }

    pub fn adaptive(breakpoints: Vec<f64>) -> Self {
        ExpectationMethod::Adaptive {
            tol: Tolerance {
                abs: 1e-13,
                rel: 1e-12,
                max_panels: 4000,
            },
            breakpoints,
        }
    }
}

impl AuxiliaryProcessLaw {
    pub fn new(beta: f64, eta: f64) -> Self {
        Self { beta, eta }
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self::new(params.beta, params.eta)
    }

    /// Mean and standard deviation of `Ũ_s` given `Ũ_t = u`.
    pub fn transition(&self, t: f64, s: f64, u: f64) -> (f64, f64) {
        let dt = (s - t).max(0.0);
        (u + self.beta * dt, self.eta * dt.sqrt())
    }

    /// Transition density `p(z; t, s, u)`.
    pub fn density(&self, z: f64, t: f64, s: f64, u: f64) -> f64 {
        let (mean, sd) = self.transition(t, s, u);
        normal::pdf((z - mean) / sd) / sd
    }

    /// `E[f(Ũ_s) | Ũ_t = u]`.
    pub fn expect<F>(&self, t: f64, s: f64, u: f64, f: F, method: &ExpectationMethod) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let (mean, sd) = self.transition(t, s, u);
        if sd == 0.0 {
            let v = f(mean);
            return if v.is_finite() {
                Ok(v)
            } else {
                Err(HedgeError::NonFiniteIntegrand { x: mean })
            };
        }
        match method {
            ExpectationMethod::Hermite(rule) => rule.expect(mean, sd, f),
            ExpectationMethod::Adaptive { tol, breakpoints } => {
                let cuts: Vec<f64> = breakpoints.iter().map(|b| (b - mean) / sd).collect();
                integrate(
                    |z| normal::pdf(z) * f(mean + sd * z),
                    -TAIL,
                    TAIL,
                    &cuts,
                    *tol,
                )
            }
        }
    }
}

/// `g`, `∂_U g` and `∂_UU g` for a given exposure over a fixed horizon.
#[derive(Debug, Clone)]
pub enum PayoffCurve {
    Linear { units: f64, beta: f64, horizon: f64 },
    Call(CallCurve),
    Custom(CustomCurve),
}

/// Quadrature-backed curve for a caller-supplied payoff.
#[derive(Debug, Clone)]
pub struct CustomCurve {
    pub law: AuxiliaryProcessLaw,
    pub horizon: f64,
    pub payoff: CustomPayoff,
    method: ExpectationMethod,
}

impl CustomCurve {
    pub fn new(law: AuxiliaryProcessLaw, horizon: f64, payoff: CustomPayoff, nodes: usize) -> Self {
        let method = if payoff.features.is_empty() {
            ExpectationMethod::hermite(nodes)
        } else {
            ExpectationMethod::adaptive(payoff.features.clone())
        };
        Self {
            law,
            horizon,
            payoff,
            method,
        }
    }

    fn scale(u: f64) -> f64 {
        u.abs().max(1.0)
    }

    pub fn g(&self, t: f64, u: f64) -> Result<f64> {
        self.law
            .expect(t, self.horizon, u, |x| self.payoff.eval(x), &self.method)
    }

    pub fn delta(&self, t: f64, u: f64) -> Result<f64> {
        let (mean, sd) = self.law.transition(t, self.horizon, u);
        if let Some(d) = &self.payoff.derivative {
            return self.law.expect(t, self.horizon, u, |x| d(x), &self.method);
        }
        if sd < 1e-6 {
            let h = 1e-5 * Self::scale(u);
            let p = &self.payoff;
            return Ok((p.eval(mean + h) - p.eval(mean - h)) / (2.0 * h));
        }
        // likelihood-ratio weight (x − mean)/sd²
        self.law.expect(
            t,
            self.horizon,
            u,
            |x| self.payoff.eval(x) * (x - mean) / (sd * sd),
            &self.method,
        )
    }

    pub fn gamma(&self, t: f64, u: f64) -> Result<f64> {
        let (mean, sd) = self.law.transition(t, self.horizon, u);
        if sd < 1e-4 {
            let h = 1e-4 * Self::scale(u);
            let (up, down) = (self.delta(t, u + h)?, self.delta(t, u - h)?);
            return Ok((up - down) / (2.0 * h));
        }
        if let Some(d) = &self.payoff.derivative {
            return self.law.expect(
                t,
                self.horizon,
                u,
                |x| d(x) * (x - mean) / (sd * sd),
                &self.method,
            );
        }
        let var = sd * sd;
        self.law.expect(
            t,
            self.horizon,
            u,
            |x| {
                let z2 = (x - mean) * (x - mean);
                self.payoff.eval(x) * (z2 - var) / (var * var)
            },
            &self.method,
        )
    }
}

impl PayoffCurve {
    pub fn new(params: &ModelParams, exposure: &Exposure) -> Result<Self> {
        exposure.validate()?;
        Ok(match exposure {
            Exposure::Linear { units } => PayoffCurve::Linear {
                units: *units,
                beta: params.beta,
                horizon: params.horizon,
            },
            Exposure::BachelierCall {
                n_options,
                strike,
                dt_offset,
            } => PayoffCurve::Call(CallCurve::new(params, *n_options, *strike, *dt_offset)),
            Exposure::CustomSmooth(p) => PayoffCurve::Custom(CustomCurve::new(
                AuxiliaryProcessLaw::from_params(params),
                params.horizon,
                p.clone(),
                DEFAULT_HERMITE_NODES,
            )),
        })
    }

    pub fn horizon(&self) -> f64 {
        match self {
            PayoffCurve::Linear { horizon, .. } => *horizon,
            PayoffCurve::Call(c) => c.horizon,
            PayoffCurve::Custom(c) => c.horizon,
        }
    }

    /// `g(t,u)`; NaN if a quadrature-backed curve fails.
    pub fn g(&self, t: f64, u: f64) -> f64 {
        match self {
            PayoffCurve::Linear {
                units,
                beta,
                horizon,
            } => units * (u + beta * (horizon - t)),
            PayoffCurve::Call(c) => c.value(t, u),
            PayoffCurve::Custom(c) => c.g(t, u).unwrap_or(f64::NAN),
        }
    }

    /// `∂_U g(t,u)`, the option delta.
    pub fn delta(&self, t: f64, u: f64) -> f64 {
        match self {
            PayoffCurve::Linear { units, .. } => *units,
            PayoffCurve::Call(c) => c.delta(t, u),
            PayoffCurve::Custom(c) => c.delta(t, u).unwrap_or(f64::NAN),
        }
    }

    /// `∂_UU g(t,u)`.
    pub fn gamma(&self, t: f64, u: f64) -> f64 {
        match self {
            PayoffCurve::Linear { .. } => 0.0,
            PayoffCurve::Call(c) => c.gamma(t, u),
            PayoffCurve::Custom(c) => c.gamma(t, u).unwrap_or(f64::NAN),
        }
    }

    /// Locations where `delta(s, ·)` changes quickly, used as quadrature breakpoints.
    pub fn steep_points(&self, s: f64) -> Vec<f64> {
        match self {
            PayoffCurve::Linear { .. } => Vec::new(),
            PayoffCurve::Call(c) => {
                let centre = c.steep_point(s);
                let width = c.transition_width(s);
                [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0]
                    .iter()
                    .map(|j| centre + j * width)
                    .collect()
            }
            PayoffCurve::Custom(c) => c
                .payoff
                .features
                .iter()
                .map(|f| f - c.law.beta * (c.horizon - s))
                .collect(),
        }
    }

    /// Quadrature suited to integrating functions of `delta(s, ·)`.
    pub fn method_at(&self, s: f64) -> ExpectationMethod {
        match self {
            PayoffCurve::Custom(c) if c.payoff.features.is_empty() => c.method.clone(),
            _ => ExpectationMethod::adaptive(self.steep_points(s)),
        }
    }
}

/// `g(t,u)` for a custom payoff by quadrature against the transition law.
pub fn generic_g(
    law: &AuxiliaryProcessLaw,
    payoff: &CustomPayoff,
    horizon: f64,
    t: f64,
    u: f64,
    nodes: usize,
) -> Result<f64> {
    let t = check_time(t, f64::NEG_INFINITY, horizon)?;
    let method = if payoff.features.is_empty() {
        ExpectationMethod::hermite(nodes)
    } else {
        ExpectationMethod::adaptive(
            payoff
                .features
                .iter()
                .map(|f| f - law.beta * (horizon - t))
                .collect(),
        )
    };
    law.expect(t, horizon, u, |x| payoff.eval(x), &method)
}

/// `E[∂_U g(s, Ũ_s) | Ũ_t = u] − ∂_U g(t, u)`, which vanishes because the
/// delta process of `g` is a martingale along `Ũ`.
pub fn delta_martingale_check(
    law: &AuxiliaryProcessLaw,
    curve: &PayoffCurve,
    t: f64,
    s: f64,
    u: f64,
) -> Result<f64> {
    if t.is_nan() || s.is_nan() || t > s {
        return Err(HedgeError::Domain(format!(
            "conditioning time t={t} must not exceed s={s}"
        )));
    }
    let s = check_time(s, f64::NEG_INFINITY, curve.horizon())?;
    if s == t {
        return Ok(0.0);
    }
    if let PayoffCurve::Linear { .. } = curve {
        return Ok(0.0);
    }
    let method = curve.method_at(s);
    let lhs = law.expect(t, s, u, |x| curve.delta(s, x), &method)?;
    Ok(lhs - curve.delta(t, u))
}
