//! First-order expansion of the hedging problem in a joint scaling `(θc, θγ)`
//! of cross impact and risk aversion.
//!
//! The value correction is `ĥ = h0 + θ(c·h1 + γ·h2)` with
//! `h0 = f0 + f1 q + f2 q² + g`, `h1 = λ0 + λ1 q` and
//! `h2 = Λ0 + Λ1 q + Λ2 q²`. Because the delta `∂_U g` is a martingale along the
//! uncontrolled factor, every expectation except `E[(∂_U g)²]` collapses to a
//! deterministic integral times the current delta.

mod strategy;
mod table;

pub use strategy::{nu_prime, DeltaSubstitution, NuHat, RiskNeutralCrossImpact};

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{check_time, HedgeError, Result};
use crate::market::{Exposure, ModelParams};
use crate::normal;
use crate::payoff::{AuxiliaryProcessLaw, PayoffCurve};
use crate::quadrature::{integrate, LegendreRule, Tolerance};
use table::TailTable;

/// Panels of the tabulated deterministic integrals.
pub const TABLE_PANELS: usize = 4096;
/// Gauss–Legendre nodes in time for `∫ E[(∂_U g)²] ds`.
pub const TIME_NODES: usize = 64;

/// Expansion parameter `θ`; effective cross impact and risk aversion are `θc`, `θγ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionScale {
    theta: f64,
}

impl ExpansionScale {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(HedgeError::InvalidParameter {
                name: "theta",
                reason: format!("must be finite and non-negative, got {theta}"),
            });
        }
        Ok(Self { theta })
    }

    pub fn unit() -> Self {
        Self { theta: 1.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn effective_c(&self, params: &ModelParams) -> f64 {
        self.theta * params.c
    }

    pub fn effective_gamma(&self, params: &ModelParams) -> f64 {
        self.theta * params.gamma
    }
}

/// Components of the first-order value approximation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionValue {
    /// `f0 + f1 q + f2 q² + g`.
    pub h0: f64,
    /// `λ0 + λ1 q`, the cross-impact coefficient.
    pub h1: f64,
    /// `Λ0 + Λ1 q + Λ2 q²`, the risk-aversion coefficient.
    pub h2: f64,
    /// `h0 + θ(c·h1 + γ·h2)`.
    pub total: f64,
}

#[derive(Debug)]
struct DriftTables {
    f0: TailTable,
    lambda0: TailTable,
    /// `∫_t^T w f1 Λ2 ds` with `w(s) = 2k + m(T − s)`.
    weighted: TailTable,
    /// `∫_t^T f1 D1 ds`.
    f1_d1: TailTable,
    /// `∫_t^T f1 c1 ds`.
    f1_c1: TailTable,
}

/// Expansion coefficients for one parameter set and exposure.
///
/// Coefficients do not depend on `θ`; one instance serves every scale.
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients {
    params: ModelParams,
    curve: PayoffCurve,
    m: f64,
    tables: Option<Arc<DriftTables>>,
    time_rule: Arc<LegendreRule>,
}

impl ExpansionCoefficients {
    pub fn new(params: &ModelParams, exposure: &Exposure) -> Result<Self> {
        params.validate()?;
        let curve = PayoffCurve::new(params, exposure)?;
        Ok(Self::with_curve(params, curve))
    }

    /// `params` must already be validated.
    pub fn with_curve(params: &ModelParams, curve: PayoffCurve) -> Self {
        let m = params.derived().m;
        let mut out = Self {
            params: *params,
            curve,
            m,
            tables: None,
            time_rule: Arc::new(LegendreRule::new(TIME_NODES)),
        };
        if params.mu != 0.0 {
            out.tables = Some(Arc::new(out.build_tables()));
        }
        out
    }

    fn build_tables(&self) -> DriftTables {
        let horizon = self.params.horizon;
        let k = self.params.k;
        let f0 = TailTable::build(|s| self.f1_at(s).powi(2) / (4.0 * k), horizon, TABLE_PANELS);
        let lambda0 = TailTable::build(|s| self.f1_at(s) / self.w(s), horizon, TABLE_PANELS);
        let weighted = TailTable::build(
            |s| self.w(s) * self.f1_at(s) * self.lambda2_at(s),
            horizon,
            TABLE_PANELS,
        );
        let d1 = |s: f64| weighted.eval(s) / (k * self.w(s));
        let f1_d1 = TailTable::build(|s| self.f1_at(s) * d1(s), horizon, TABLE_PANELS);
        let f1_c1 = TailTable::build(|s| self.f1_at(s) * self.c1(s), horizon, TABLE_PANELS);
        DriftTables {
            f0,
            lambda0,
            weighted,
            f1_d1,
            f1_c1,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn curve(&self) -> &PayoffCurve {
        &self.curve
    }

    fn check(&self, t: f64) -> Result<f64> {
        check_time(t, 0.0, self.params.horizon)
    }

    #[inline]
    fn tau(&self, t: f64) -> f64 {
        self.params.horizon - t
    }

    /// `2k + m(T − t)`.
    #[inline]
    fn w(&self, t: f64) -> f64 {
        2.0 * self.params.k + self.m * self.tau(t)
    }

    /// `∫_t^T w(s) ds / w(t)`.
    #[inline]
    fn c1(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        (2.0 * self.params.k * tau + 0.5 * self.m * tau * tau) / self.w(t)
    }

    #[inline]
    fn f1_at(&self, t: f64) -> f64 {
        let p = &self.params;
        let tau = self.tau(t);
        p.mu * tau * (4.0 * p.k + self.m * tau) / (4.0 * p.k + 2.0 * self.m * tau)
    }

    #[inline]
    fn f2_at(&self, t: f64) -> f64 {
        -self.params.k * self.m / self.w(t) - 0.5 * self.params.b
    }

    #[inline]
    fn lambda2_at(&self, t: f64) -> f64 {
        let p = &self.params;
        let tau = self.tau(t);
        let (k, m) = (p.k, self.m);
        let w = self.w(t);
        -p.sigma * p.sigma * tau * (12.0 * k * k + 6.0 * k * m * tau + m * m * tau * tau)
            / (6.0 * w * w)
    }

    #[inline]
    fn d1_at(&self, t: f64) -> f64 {
        match &self.tables {
            Some(tb) => tb.weighted.eval(t) / (self.params.k * self.w(t)),
            None => 0.0,
        }
    }

    #[inline]
    fn lambda1_at(&self, t: f64, delta: f64) -> f64 {
        let tau = self.tau(t);
        -self.m * tau / self.w(t) * delta
    }

    #[inline]
    fn big_lambda1_at(&self, t: f64, delta: f64) -> f64 {
        let p = &self.params;
        self.d1_at(t) - p.rho * p.sigma * p.eta * delta * self.c1(t)
    }

    pub fn f1(&self, t: f64) -> Result<f64> {
        Ok(self.f1_at(self.check(t)?))
    }

    pub fn f2(&self, t: f64) -> Result<f64> {
        Ok(self.f2_at(self.check(t)?))
    }

    /// `∫_t^T f1² / 4k`, from the tabulated integral.
    pub fn f0(&self, t: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.tables.as_ref().map_or(0.0, |tb| tb.f0.eval(t)))
    }

    /// `g(t, u) = E[ψ(Ũ_T) | Ũ_t = u]`.
    pub fn g(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.curve.g(self.check(t)?, u))
    }

    /// `∂_U g(t, u)`.
    pub fn delta(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.curve.delta(self.check(t)?, u))
    }

    /// `λ1 = −m(T−t)/(2k + m(T−t)) · ∂_U g`.
    pub fn lambda1(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.lambda1_at(t, self.curve.delta(t, u)))
    }

    /// `λ0 = ∂_U g(t,u) · ∫_t^T f1(s) / (2k + m(T−s)) ds`.
    pub fn lambda0(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(match &self.tables {
            Some(tb) => self.curve.delta(t, u) * tb.lambda0.eval(t),
            None => 0.0,
        })
    }

    /// Closed-form `Λ2(t) ≤ 0`.
    pub fn big_lambda2(&self, t: f64) -> Result<f64> {
        Ok(self.lambda2_at(self.check(t)?))
    }

    /// `Λ1 = D1(t) − ρση ∂_U g(t,u) ∫_t^T w(s) ds / w(t)`.
    pub fn big_lambda1(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.big_lambda1_at(t, self.curve.delta(t, u)))
    }

    /// `Λ0 = (1/2k) E[∫ f1 Λ1 ds] − (η²/2) ∫ E[(∂_U g)²] ds`.
    pub fn big_lambda0(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        let p = &self.params;
        let drift = match &self.tables {
            Some(tb) => {
                let delta = self.curve.delta(t, u);
                (tb.f1_d1.eval(t) - p.rho * p.sigma * p.eta * delta * tb.f1_c1.eval(t))
                    / (2.0 * p.k)
            }
            None => 0.0,
        };
        let sq = self.squared_delta_integral(t, u)?;
        Ok(drift - 0.5 * p.eta * p.eta * sq)
    }

    /// `∫_t^T E[(∂_U g(s, Ũ_s))² | Ũ_t = u] ds`.
    pub fn squared_delta_integral(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        let tau = self.tau(t);
        if tau == 0.0 {
            return Ok(0.0);
        }
        match &self.curve {
            PayoffCurve::Linear { units, .. } => Ok(units * units * tau),
            PayoffCurve::Call(c) if c.eta > 0.0 => {
                // E[Φ(z_s)²] is a bivariate normal probability with correlation
                // (s − t)/τ', integrated here over that correlation.
                let tau_full = tau + c.dt_offset;
                let sd = c.eta * tau_full.sqrt();
                let z = (u + c.beta * tau_full - c.strike) / sd;
                let big_r = tau / tau_full;
                let top = big_r.asin();
                let tail = self.time_rule.integrate(
                    |phi| {
                        let sp = phi.sin();
                        (big_r - sp) * (-z * z / (1.0 + sp)).exp()
                    },
                    0.0,
                    top,
                ) / (2.0 * PI);
                let cdf = normal::cdf(z);
                Ok(c.n_options * c.n_options * tau_full * (big_r * cdf * cdf + tail))
            }
            PayoffCurve::Call(c) => {
                let d = c.delta(t, u);
                Ok(d * d * tau)
            }
            PayoffCurve::Custom(_) => self.squared_delta_integral_generic(t, u),
        }
    }

    /// Same integral by Gauss–Legendre in `√(T − s)` and quadrature over `Ũ_s`.
    pub fn squared_delta_integral_generic(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        let horizon = self.params.horizon;
        let law = AuxiliaryProcessLaw::from_params(&self.params);
        let mut err = None;
        // s = T − v² absorbs the square-root behaviour near the horizon
        let v = self.time_rule.integrate(
            |v| {
                let s = horizon - v * v;
                let method = self.curve.method_at(s);
                match law.expect(t, s, u, |x| self.curve.delta(s, x).powi(2), &method) {
                    Ok(val) => 2.0 * v * val,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            0.0,
            (horizon - t).sqrt(),
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// First-order value approximation and its components.
    pub fn value(&self, scale: &ExpansionScale, t: f64, q: f64, u: f64) -> Result<ExpansionValue> {
        let t = self.check(t)?;
        let p = &self.params;
        let h0 = self.f0(t)? + self.f1_at(t) * q + self.f2_at(t) * q * q + self.curve.g(t, u);
        let delta = self.curve.delta(t, u);
        let h1 = self.lambda0(t, u)? + self.lambda1_at(t, delta) * q;
        let h2 = self.big_lambda0(t, u)?
            + self.big_lambda1_at(t, delta) * q
            + self.lambda2_at(t) * q * q;
        let total = h0 + scale.theta * (p.c * h1 + p.gamma * h2);
        if !total.is_finite() {
            return Err(HedgeError::Domain(format!(
                "non-finite value approximation at t={t}, q={q}, u={u}"
            )));
        }
        Ok(ExpansionValue { h0, h1, h2, total })
    }

    /// `ν0 = (f1 + (2 f2 + b) q) / 2k`.
    pub fn nu0(&self, t: f64, q: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.nu0_at(t, q))
    }

    #[inline]
    fn nu0_at(&self, t: f64, q: f64) -> f64 {
        let p = &self.params;
        (self.f1_at(t) + (2.0 * self.f2_at(t) + p.b) * q) / (2.0 * p.k)
    }

    /// `ν1 = (∂_U g + λ1) / 2k`.
    pub fn nu1(&self, t: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        let d = self.curve.delta(t, u);
        Ok((d + self.lambda1_at(t, d)) / (2.0 * self.params.k))
    }

    /// `ν2 = (Λ1 + 2 Λ2 q) / 2k`.
    pub fn nu2(&self, t: f64, q: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        let d = self.curve.delta(t, u);
        Ok((self.big_lambda1_at(t, d) + 2.0 * self.lambda2_at(t) * q) / (2.0 * self.params.k))
    }

    /// `ν̂ = ν0 + θ(c ν1 + γ ν2)`.
    pub fn nu_hat(&self, scale: &ExpansionScale, t: f64, q: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.nu_hat_at(scale.theta, t, q, u))
    }

    #[inline]
    fn nu_hat_at(&self, theta: f64, t: f64, q: f64, u: f64) -> f64 {
        let p = &self.params;
        let d = self.curve.delta(t, u);
        let two_k = 2.0 * p.k;
        let nu1 = (d + self.lambda1_at(t, d)) / two_k;
        let nu2 = (self.big_lambda1_at(t, d) + 2.0 * self.lambda2_at(t) * q) / two_k;
        self.nu0_at(t, q) + theta * (p.c * nu1 + p.gamma * nu2)
    }

    /// `ν0 + c ∂_U g / (2k + m(T − t))`, the speed with `γ = 0` and `θ = 1`.
    pub fn risk_neutral_speed(&self, t: f64, q: f64, u: f64) -> Result<f64> {
        let t = self.check(t)?;
        Ok(self.risk_neutral_at(t, q, u))
    }

    #[inline]
    fn risk_neutral_at(&self, t: f64, q: f64, u: f64) -> f64 {
        self.nu0_at(t, q) + self.params.c * self.curve.delta(t, u) / self.w(t)
    }

    /// Inventory level `(c/m)·∂_U g` that the cross-impact term pulls toward.
    pub fn cross_impact_target(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.params.c / self.m * self.delta(t, u)?)
    }
}

/// `(f0, f1, f2)` at `t`, with `f0` by adaptive quadrature.
pub fn f_coefficients(params: &ModelParams, t: f64) -> Result<(f64, f64, f64)> {
    params.validate()?;
    let coeffs = ExpansionCoefficients::with_curve(
        &ModelParams { mu: 0.0, ..*params },
        PayoffCurve::Linear {
            units: 0.0,
            beta: params.beta,
            horizon: params.horizon,
        },
    );
    let t = coeffs.check(t)?;
    let f = |s: f64| {
        let tau = params.horizon - s;
        let m = coeffs.m;
        params.mu * tau * (4.0 * params.k + m * tau) / (4.0 * params.k + 2.0 * m * tau)
    };
    let f0 = if params.mu == 0.0 || t == params.horizon {
        0.0
    } else {
        integrate(
            |s| f(s).powi(2),
            t,
            params.horizon,
            &[],
            Tolerance::relative(1e-12),
        )? / (4.0 * params.k)
    };
    Ok((f0, f(t), coeffs.f2_at(t)))
}

/// `ν̂` for one evaluation; build [`ExpansionCoefficients`] to reuse tables.
pub fn nu_hat(
    params: &ModelParams,
    exposure: &Exposure,
    scale: &ExpansionScale,
    t: f64,
    q: f64,
    u: f64,
) -> Result<f64> {
    ExpansionCoefficients::new(params, exposure)?.nu_hat(scale, t, q, u)
}

pub fn risk_neutral_cross_impact_speed(
    params: &ModelParams,
    exposure: &Exposure,
    t: f64,
    q: f64,
    u: f64,
) -> Result<f64> {
    ExpansionCoefficients::new(params, exposure)?.risk_neutral_speed(t, q, u)
}

pub fn expansion_value(
    params: &ModelParams,
    exposure: &Exposure,
    scale: &ExpansionScale,
    t: f64,
    q: f64,
    u: f64,
) -> Result<ExpansionValue> {
    ExpansionCoefficients::new(params, exposure)?.value(scale, t, q, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig7() -> ModelParams {
        ModelParams {
            mu: 0.0,
            sigma: 1.0,
            beta: 0.0,
            eta: 1.0,
            rho: 0.5,
            b: 1e-2,
            c: 1e-3,
            k: 1e-3,
            gamma: 2e-3,
            alpha: 0.05,
            horizon: 1.0,
        }
    }

    #[test]
    fn terminal_conditions() {
        let p = ModelParams { mu: 0.1, ..fig7() };
        let c = ExpansionCoefficients::new(&p, &Exposure::call(100.0, 1.0)).unwrap();
        assert_eq!(c.f1(1.0).unwrap(), 0.0);
        assert!((c.f2(1.0).unwrap() + 0.05).abs() < 1e-15);
        assert_eq!(c.lambda1(1.0, 1.3).unwrap(), 0.0);
        assert!(c.lambda0(1.0, 1.3).unwrap().abs() < 1e-12);
        assert!(c.big_lambda0(1.0, 1.3).unwrap().abs() < 1e-12);
        assert!(c.big_lambda1(1.0, 1.3).unwrap().abs() < 1e-12);
        assert_eq!(c.big_lambda2(1.0).unwrap(), 0.0);
    }

    #[test]
    fn tabulated_f0_matches_adaptive() {
        let p = ModelParams { mu: 0.1, ..fig7() };
        let c = ExpansionCoefficients::new(&p, &Exposure::linear(1.0)).unwrap();
        for t in [0.0, 0.3, 0.77, 0.999] {
            let (f0, f1, f2) = f_coefficients(&p, t).unwrap();
            assert!((c.f0(t).unwrap() - f0).abs() < 1e-12 * f0.abs().max(1.0));
            assert_eq!(c.f1(t).unwrap(), f1);
            assert_eq!(c.f2(t).unwrap(), f2);
        }
    }

    #[test]
    fn zero_drift_zeroes_drift_terms() {
        let c = ExpansionCoefficients::new(&fig7(), &Exposure::call(100.0, 1.0)).unwrap();
        assert_eq!(c.f0(0.2).unwrap(), 0.0);
        assert_eq!(c.f1(0.2).unwrap(), 0.0);
        assert_eq!(c.lambda0(0.2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_reductions() {
        let c = ExpansionCoefficients::new(&fig7(), &Exposure::linear(2.0)).unwrap();
        let (t, tau) = (0.25, 0.75);
        let w = 2e-3 + 0.09 * tau;
        assert!((c.lambda1(t, 0.0).unwrap() + 0.09 * tau * 2.0 / w).abs() < 1e-14);
        assert!((c.big_lambda0(t, 0.0).unwrap() + 0.5 * 4.0 * tau).abs() < 1e-14);
    }

    #[test]
    fn call_squared_delta_matches_nested_quadrature() {
        let p = fig7();
        let c = ExpansionCoefficients::new(&p, &Exposure::call(100.0, 1.0)).unwrap();
        let law = AuxiliaryProcessLaw::from_params(&p);
        for (t, u) in [(0.0, 1.0), (0.5, 1.4), (0.8, 0.7), (0.95, 1.02)] {
            let fast = c.squared_delta_integral(t, u).unwrap();
            // s = T + δt − v² removes the square-root behaviour near the horizon
            let end = 1.0 + 1e-5;
            let inner = |v: f64| {
                let s = end - v * v;
                let method = c.curve().method_at(s);
                2.0 * v
                    * law
                        .expect(t, s, u, |x| c.curve().delta(s, x).powi(2), &method)
                        .unwrap()
            };
            let (lo, hi) = (1e-5f64.sqrt(), (end - t).sqrt());
            let slow = integrate(inner, lo, hi, &[], Tolerance::relative(1e-12)).unwrap();
            assert!(
                (fast - slow).abs() < 1e-9 * fast.abs(),
                "{t} {u} {fast} {slow}"
            );
        }
    }

    #[test]
    fn generic_time_rule_is_accurate_for_smooth_payoffs() {
        let p = fig7();
        let sq =
            crate::market::CustomPayoff::new("square", |u| u * u, 0.0).with_derivative(|u| 2.0 * u);
        let c = ExpansionCoefficients::new(&p, &Exposure::CustomSmooth(sq)).unwrap();
        // delta(s, x) = 2x, so the integral is 4 ∫ (u² + (s − t)) ds
        let (t, u) = (0.2, 0.6);
        let tau: f64 = 0.8;
        let want = 4.0 * (u * u * tau + 0.5 * tau * tau);
        let got = c.squared_delta_integral(t, u).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} {want}");
    }

    #[test]
    fn theta_zero_is_base_speed() {
        let c = ExpansionCoefficients::new(&fig7(), &Exposure::call(100.0, 1.0)).unwrap();
        let s0 = ExpansionScale::new(0.0).unwrap();
        assert_eq!(
            c.nu_hat(&s0, 0.3, 0.7, 1.1).unwrap(),
            c.nu0(0.3, 0.7).unwrap()
        );
        assert!(ExpansionScale::new(-1.0).is_err());
    }
}
