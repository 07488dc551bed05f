//! Feedback strategies built from the expansion.

use std::sync::Arc;

use super::{ExpansionCoefficients, ExpansionScale};
use crate::error::Result;
use crate::linear::LinearHedger;
use crate::market::ModelParams;
use crate::payoff::PayoffCurve;
use crate::strategy::{Strategy, StrategyTag};

/// `ν̂ = ν0 + θ(c ν1 + γ ν2)`.
#[derive(Debug, Clone)]
pub struct NuHat {
    coeffs: Arc<ExpansionCoefficients>,
    theta: f64,
}

impl NuHat {
    pub fn new(coeffs: Arc<ExpansionCoefficients>, scale: ExpansionScale) -> Self {
        Self {
            coeffs,
            theta: scale.theta(),
        }
    }
}

impl Strategy for NuHat {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        let t = t.clamp(0.0, self.coeffs.params.horizon);
        self.coeffs.nu_hat_at(self.theta, t, q, u)
    }

    fn tag(&self) -> StrategyTag {
        StrategyTag::ExpansionNuHat
    }
}

/// Linear-case optimum with the unit count replaced by the current delta,
/// under `(θc, θγ)`.
#[derive(Debug, Clone)]
pub struct DeltaSubstitution {
    hedger: LinearHedger,
    curve: PayoffCurve,
}

impl DeltaSubstitution {
    pub fn new(params: &ModelParams, curve: PayoffCurve, scale: ExpansionScale) -> Result<Self> {
        Ok(Self {
            hedger: LinearHedger::new(&params.scaled(scale.theta()), 0.0)?,
            curve,
        })
    }

    pub fn from_coefficients(
        coeffs: &ExpansionCoefficients,
        scale: ExpansionScale,
    ) -> Result<Self> {
        Self::new(coeffs.params(), coeffs.curve().clone(), scale)
    }

    pub fn speed_checked(&self, t: f64, q: f64, u: f64) -> Result<f64> {
        let units = self.curve.delta(t, u);
        self.hedger.speed_for_units(t, q, units)
    }
}

impl Strategy for DeltaSubstitution {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        self.speed_checked(t, q, u).unwrap_or(f64::NAN)
    }

    fn tag(&self) -> StrategyTag {
        StrategyTag::DeltaSubstitution
    }
}

/// `ν0 + c ∂_U g / (2k + m(T − t))`.
#[derive(Debug, Clone)]
pub struct RiskNeutralCrossImpact {
    coeffs: Arc<ExpansionCoefficients>,
}

impl RiskNeutralCrossImpact {
    pub fn new(coeffs: Arc<ExpansionCoefficients>) -> Self {
        Self { coeffs }
    }
}

impl Strategy for RiskNeutralCrossImpact {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        let t = t.clamp(0.0, self.coeffs.params.horizon);
        self.coeffs.risk_neutral_at(t, q, u)
    }

    fn tag(&self) -> StrategyTag {
        StrategyTag::RiskNeutralCrossImpact
    }
}

/// `ν′` at one point.
pub fn nu_prime(
    params: &ModelParams,
    curve: &PayoffCurve,
    scale: &ExpansionScale,
    t: f64,
    q: f64,
    u: f64,
) -> Result<f64> {
    DeltaSubstitution::new(params, curve.clone(), *scale)?.speed_checked(t, q, u)
}
