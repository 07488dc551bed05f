//! Closed-form solution of the hedging problem for a linear exposure `ψ(U) = N·U`.
//!
//! Every exponential is written in terms of `E = exp(−ω τ / k) ≤ 1` and
//! `r = (1 − E)/ω`, which stays finite for large `ω τ / k` and tends to `τ / k`
//! as `ω → 0`, so the risk-neutral case needs no separate branch.

use crate::error::{check_time, HedgeError, Result};
use crate::market::{ModelParams, State};
use crate::quadrature::{integrate, Tolerance};
use crate::strategy::{Strategy, StrategyTag};

/// Closed-form value function and strategy for `units` frozen shares of `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearHedger {
    params: ModelParams,
    units: f64,
    m: f64,
    omega: f64,
    phi_plus: f64,
}

/// `(E, r)` for the remaining time `tau`.
#[inline]
fn decay(omega: f64, k: f64, tau: f64) -> (f64, f64) {
    if omega == 0.0 {
        return (1.0, tau / k);
    }
    let x = omega * tau / k;
    ((-x).exp(), -(-x).exp_m1() / omega)
}

impl LinearHedger {
    pub fn new(params: &ModelParams, units: f64) -> Result<Self> {
        params.validate()?;
        if !units.is_finite() {
            return Err(HedgeError::InvalidParameter {
                name: "units",
                reason: "must be finite".into(),
            });
        }
        let d = params.derived();
        Ok(Self {
            params: *params,
            units,
            m: d.m,
            omega: d.omega,
            phi_plus: d.phi_plus,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn units(&self) -> f64 {
        self.units
    }

    /// `ζ = μ − γρση·N`.
    pub fn zeta(&self) -> f64 {
        self.params.zeta(self.units)
    }

    fn tau(&self, t: f64) -> Result<f64> {
        let t = check_time(t, 0.0, self.params.horizon)?;
        Ok(self.params.horizon - t)
    }

    fn h2_at(&self, tau: f64) -> f64 {
        let (e, r) = decay(self.omega, self.params.k, tau);
        let a = self.phi_plus * r * (1.0 + e);
        -(a * self.omega + self.m * e * e) / (a + 2.0 * e * e) - 0.5 * self.params.b
    }

    fn h1_at(&self, tau: f64, units: f64) -> f64 {
        let p = &self.params;
        let (e, r) = decay(self.omega, p.k, tau);
        let zeta = p.zeta(units);
        let cn = p.c * units;
        let num = zeta * p.k * r * (self.phi_plus * r + 2.0 * e) + 2.0 * cn * e;
        let den = self.phi_plus * r * (1.0 + e) + 2.0 * e * e;
        num / den - cn
    }

    /// Quadratic coefficient of `h(t, q)`.
    pub fn h2(&self, t: f64) -> Result<f64> {
        Ok(self.h2_at(self.tau(t)?))
    }

    /// Linear coefficient of `h(t, q)`.
    pub fn h1(&self, t: f64) -> Result<f64> {
        Ok(self.h1_at(self.tau(t)?, self.units))
    }

    /// Constant term of `h(t, q)`, with the running integral evaluated adaptively.
    pub fn h0(&self, t: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        let p = &self.params;
        let n = self.units;
        let drift = (p.beta * n - 0.5 * p.gamma * p.eta * p.eta * n * n) * tau;
        if tau == 0.0 {
            return Ok(0.0);
        }
        let cn = p.c * n;
        let tol = Tolerance::relative(1e-10);
        let running = integrate(
            |s| {
                let v = self.h1_at(s, n) + cn;
                v * v
            },
            0.0,
            tau,
            &[],
            tol,
        )?;
        Ok(drift + running / (4.0 * p.k))
    }

    /// `h(t, q) = h0 + h1·q + h2·q²`.
    pub fn h(&self, t: f64, q: f64) -> Result<f64> {
        Ok(self.h0(t)? + self.h1(t)? * q + self.h2(t)? * q * q)
    }

    /// Optimal speed `(c·N + h1 + (2h2 + b)·q) / 2k`.
    pub fn optimal_speed(&self, t: f64, q: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        Ok(self.speed_at(tau, q, self.units))
    }

    /// Optimal speed when the exposure is `units` shares, reusing these parameters.
    pub fn speed_for_units(&self, t: f64, q: f64, units: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        Ok(self.speed_at(tau, q, units))
    }

    #[inline]
    fn speed_at(&self, tau: f64, q: f64, units: f64) -> f64 {
        let p = &self.params;
        let slope = 2.0 * self.h2_at(tau) + p.b;
        (p.c * units + self.h1_at(tau, units) + slope * q) / (2.0 * p.k)
    }

    /// Deterministic inventory under the optimal strategy started from `q0` at time 0.
    pub fn optimal_inventory(&self, q0: f64, t: f64) -> Result<f64> {
        let t = check_time(t, 0.0, self.params.horizon)?;
        if t == 0.0 {
            return Ok(q0);
        }
        let p = &self.params;
        let horizon = p.horizon;
        let a = self.omega / p.k;
        let m = self.m;
        let shs = |u: f64| {
            if self.omega == 0.0 {
                u / p.k
            } else {
                -(-2.0 * a * u).exp_m1() / (2.0 * self.omega)
            }
        };
        let chs = |u: f64| 0.5 * (1.0 + (-2.0 * a * u).exp());
        let rest = horizon - t;
        let den = 2.0 * chs(horizon) + m * shs(horizon);
        let start = q0 * (-a * t).exp() * (2.0 * chs(rest) + m * shs(rest));
        let half_t = shs(0.5 * t);
        let half_rest = shs(0.5 * rest);
        let drift = 0.5
            * self.zeta()
            * p.k
            * (4.0 * shs(horizon - 0.5 * t) * half_t
                + 2.0 * m * (shs(rest) * half_t * half_t + shs(t) * half_rest * half_rest));
        let cross = p.c * self.units * shs(t) * (-a * rest).exp();
        Ok((start + drift + cross) / den)
    }

    /// `(μ − γρση·N) / (γσ²)`, the common long-horizon and frictionless position.
    pub fn long_horizon_position(&self) -> Result<f64> {
        let p = &self.params;
        if p.gamma == 0.0 || p.sigma == 0.0 {
            return Err(HedgeError::UndefinedLimit(format!(
                "long-horizon position needs gamma > 0 and sigma > 0 (gamma={}, sigma={})",
                p.gamma, p.sigma
            )));
        }
        Ok(self.zeta() / (p.gamma * p.sigma * p.sigma))
    }

    /// Exponent `x + q·S + N·U + h(t, q)` of the value function.
    pub fn certainty_equivalent(&self, state: &State) -> Result<f64> {
        Ok(state.x + state.q * state.s + self.units * state.u + self.h(state.t, state.q)?)
    }

    /// `−exp(−γ(x + q·S + N·U + h(t, q)))`.
    pub fn value_function(&self, state: &State) -> Result<f64> {
        let gamma = self.params.gamma;
        if gamma <= 0.0 {
            return Err(HedgeError::Domain(
                "value function requires gamma > 0; use certainty_equivalent".into(),
            ));
        }
        let arg = -gamma * self.certainty_equivalent(state)?;
        if arg > 700.0 {
            return Err(HedgeError::Overflow(format!(
                "exponent {arg} overflows; reduce gamma or normalize wealth"
            )));
        }
        Ok(-arg.exp())
    }
}

pub fn h2(params: &ModelParams, t: f64) -> Result<f64> {
    LinearHedger::new(params, 0.0)?.h2(t)
}

pub fn h1(params: &ModelParams, units: f64, t: f64) -> Result<f64> {
    LinearHedger::new(params, units)?.h1(t)
}

pub fn h0(params: &ModelParams, units: f64, t: f64) -> Result<f64> {
    LinearHedger::new(params, units)?.h0(t)
}

pub fn optimal_speed_linear(params: &ModelParams, units: f64, t: f64, q: f64) -> Result<f64> {
    LinearHedger::new(params, units)?.optimal_speed(t, q)
}

pub fn optimal_inventory_linear(params: &ModelParams, units: f64, q0: f64, t: f64) -> Result<f64> {
    LinearHedger::new(params, units)?.optimal_inventory(q0, t)
}

pub fn long_horizon_position(params: &ModelParams, units: f64) -> Result<f64> {
    LinearHedger::new(params, units)?.long_horizon_position()
}

pub fn linear_value_function(params: &ModelParams, units: f64, state: &State) -> Result<f64> {
    LinearHedger::new(params, units)?.value_function(state)
}

/// Feedback form of the linear-case optimum.
#[derive(Debug, Clone, Copy)]
pub struct LinearOptimal {
    hedger: LinearHedger,
}

impl LinearOptimal {
    pub fn new(params: &ModelParams, units: f64) -> Result<Self> {
        Ok(Self {
            hedger: LinearHedger::new(params, units)?,
        })
    }

    pub fn hedger(&self) -> &LinearHedger {
        &self.hedger
    }
}

impl Strategy for LinearOptimal {
    fn speed(&self, t: f64, q: f64, _u: f64) -> f64 {
        self.hedger.optimal_speed(t, q).unwrap_or(f64::NAN)
    }

    fn tag(&self) -> StrategyTag {
        StrategyTag::LinearOptimal
    }
}
