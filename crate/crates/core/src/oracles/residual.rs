//! Residual of the reduced HJB equation for a candidate value function.
//!
//! With `V = −exp(−γ(x + qS + h))` the reduced equation for `h(t, q, u)` reads
//!
//! ```text
//! ∂t h + μq − ½γσ²q² + (β − γρσηq) ∂U h + ½η² ∂UU h − ½γη² (∂U h)²
//!     + (∂q h + c ∂U h + b q)² / 4k = 0.
//! ```
//!
//! Derivatives are five-point central differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};
use crate::expansion::{ExpansionCoefficients, ExpansionScale};
use crate::linear::LinearHedger;
use crate::market::ModelParams;
use crate::payoff::PayoffCurve;

/// A function `h(t, q, u)` together with the parameters of the equation it should solve.
pub trait ValueApprox: Sync {
    fn value(&self, t: f64, q: f64, u: f64) -> Result<f64>;
    /// Parameters entering the equation, with any `θ` scaling already applied.
    fn equation_params(&self) -> ModelParams;
}

/// First-order expansion `ĥ` at a fixed scale; solves the equation under `(θc, θγ)`.
#[derive(Debug, Clone)]
pub struct ExpansionApprox<'a> {
    pub coeffs: &'a ExpansionCoefficients,
    pub scale: ExpansionScale,
}

impl ValueApprox for ExpansionApprox<'_> {
    fn value(&self, t: f64, q: f64, u: f64) -> Result<f64> {
        Ok(self.coeffs.value(&self.scale, t, q, u)?.total)
    }

    fn equation_params(&self) -> ModelParams {
        self.coeffs.params().scaled(self.scale.theta())
    }
}

/// Exact linear-exposure solution `h0 + h1 q + h2 q² + N u`.
#[derive(Debug, Clone)]
pub struct LinearExact {
    pub hedger: LinearHedger,
}

impl ValueApprox for LinearExact {
    fn value(&self, t: f64, q: f64, u: f64) -> Result<f64> {
        Ok(self.hedger.h(t, q)? + self.hedger.units() * u)
    }

    fn equation_params(&self) -> ModelParams {
        *self.hedger.params()
    }
}

/// Finite-difference steps; `t` and `u` steps are absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub t: f64,
    pub q: f64,
    pub u: f64,
}

impl FdSteps {
    /// `1e-3·T` in time, `2e-3·max(η√T, 1)` in the factor, `0.25` in inventory.
    pub fn standard(params: &ModelParams) -> Self {
        Self {
            t: 1e-3 * params.horizon,
            q: 0.25,
            u: 2e-3 * (params.eta * params.horizon.sqrt()).max(1.0),
        }
    }
}

fn d1<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    Ok((f(x - 2.0 * h)? - 8.0 * f(x - h)? + 8.0 * f(x + h)? - f(x + 2.0 * h)?) / (12.0 * h))
}

fn d2_with_centre<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64, centre: f64) -> Result<f64> {
    Ok(
        (-f(x - 2.0 * h)? + 16.0 * f(x - h)? - 30.0 * centre + 16.0 * f(x + h)? - f(x + 2.0 * h)?)
            / (12.0 * h * h),
    )
}

/// Left side of the reduced equation at one point.
pub fn hjb_residual<V: ValueApprox + ?Sized>(
    approx: &V,
    t: f64,
    q: f64,
    u: f64,
    steps: &FdSteps,
) -> Result<f64> {
    let p = approx.equation_params();
    let h = |t: f64, q: f64, u: f64| approx.value(t, q, u);
    let ht = d1(|s| h(s, q, u), t, steps.t)?;
    let hq = d1(|r| h(t, r, u), q, steps.q)?;
    let hu = d1(|v| h(t, q, v), u, steps.u)?;
    let huu = d2_with_centre(|v| h(t, q, v), u, steps.u, h(t, q, u)?)?;
    let g = p.gamma;
    let flow = hq + p.c * hu + p.b * q;
    let r = ht + p.mu * q - 0.5 * g * p.sigma * p.sigma * q * q
        + (p.beta - g * p.rho * p.sigma * p.eta * q) * hu
        + 0.5 * p.eta * p.eta * huu
        - 0.5 * g * p.eta * p.eta * hu * hu
        + flow * flow / (4.0 * p.k);
    if !r.is_finite() {
        return Err(HedgeError::Domain(format!(
            "non-finite residual at t={t}, q={q}, u={u}"
        )));
    }
    Ok(r)
}

/// Tensor grid of interior probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub times: Vec<f64>,
    pub inventories: Vec<f64>,
    pub factors: Vec<f64>,
}

impl ProbeGrid {
    /// `t ∈ {0.1T, …, 0.9T}`, `q ∈ {−2, …, 2}`, five factor levels evenly
    /// spanning `centre ± 2η√T`.
    pub fn standard(horizon: f64, centre: f64, eta: f64) -> Self {
        let spread = 2.0 * eta * horizon.sqrt();
        Self {
            times: (1..=9).map(|i| 0.1 * i as f64 * horizon).collect(),
            inventories: (-2..=2).map(f64::from).collect(),
            factors: (-2..=2).map(|j| centre + 0.5 * spread * j as f64).collect(),
        }
    }

    /// Standard grid centred on the strike of a call, or on `u0` otherwise.
    pub fn for_curve(params: &ModelParams, curve: &PayoffCurve, u0: f64) -> Self {
        let centre = match curve {
            PayoffCurve::Call(c) => c.strike,
            _ => u0,
        };
        Self::standard(params.horizon, centre, params.eta)
    }

    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &t in &self.times {
            for &q in &self.inventories {
                for &u in &self.factors {
                    out.push((t, q, u));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.times.len() * self.inventories.len() * self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every time must lie in `[0.05T, 0.95T]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.is_empty() {
            return Err(HedgeError::Domain("empty probe grid".into()));
        }
        for &t in &self.times {
            if !(t >= 0.05 * horizon && t <= 0.95 * horizon) {
                return Err(HedgeError::Domain(format!(
                    "probe time {t} outside the interior [{}, {}]",
                    0.05 * horizon,
                    0.95 * horizon
                )));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.inventories) || !finite(&self.factors) {
            return Err(HedgeError::Domain("non-finite probe coordinate".into()));
        }
        Ok(())
    }
}

/// Sup-norm residuals of `ĥ` per `θ` and the ratios of consecutive entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub theta_values: Vec<f64>,
    pub residual_norms: Vec<f64>,
    /// `residual_norms[i] / residual_norms[i + 1]`.
    pub ratios: Vec<f64>,
}

/// Sup-norm of the residual of `approx` over `grid`.
pub fn sup_residual<V: ValueApprox + ?Sized>(
    approx: &V,
    grid: &ProbeGrid,
    steps: &FdSteps,
) -> Result<f64> {
    grid.validate(approx.equation_params().horizon)?;
    let values: Vec<f64> = grid
        .points()
        .into_par_iter()
        .map(|(t, q, u)| hjb_residual(approx, t, q, u, steps).map(f64::abs))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Residual of the first-order expansion for each `θ` in `thetas`.
pub fn pde_residual(
    params: &ModelParams,
    payoff: &PayoffCurve,
    thetas: &[f64],
    grid: &ProbeGrid,
    steps: &FdSteps,
) -> Result<ResidualReport> {
    params.validate()?;
    grid.validate(params.horizon)?;
    let coeffs = ExpansionCoefficients::with_curve(params, payoff.clone());
    let mut norms = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let approx = ExpansionApprox {
            coeffs: &coeffs,
            scale: ExpansionScale::new(theta)?,
        };
        norms.push(sup_residual(&approx, grid, steps)?);
    }
    let ratios = norms.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ResidualReport {
        theta_values: thetas.to_vec(),
        residual_norms: norms,
        ratios,
    })
}
