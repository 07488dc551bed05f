//! Feedback trading rules `(t, q, U) → ν`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyTag {
    LinearOptimal,
    ExpansionNuHat,
    DeltaSubstitution,
    RiskNeutralCrossImpact,
    Custom,
}

impl StrategyTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyTag::LinearOptimal => "linear_optimal",
            StrategyTag::ExpansionNuHat => "expansion_nu_hat",
            StrategyTag::DeltaSubstitution => "delta_substitution",
            StrategyTag::RiskNeutralCrossImpact => "risk_neutral_cross_impact",
            StrategyTag::Custom => "custom",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Strategy: Send + Sync {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64;
    fn tag(&self) -> StrategyTag;
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        (**self).speed(t, q, u)
    }
    fn tag(&self) -> StrategyTag {
        (**self).tag()
    }
}

impl<S: Strategy + ?Sized> Strategy for Arc<S> {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        (**self).speed(t, q, u)
    }
    fn tag(&self) -> StrategyTag {
        (**self).tag()
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        (**self).speed(t, q, u)
    }
    fn tag(&self) -> StrategyTag {
        (**self).tag()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSpeed(pub f64);

impl Strategy for ConstantSpeed {
    fn speed(&self, _t: f64, _q: f64, _u: f64) -> f64 {
        self.0
    }
    fn tag(&self) -> StrategyTag {
        StrategyTag::Custom
    }
}

/// Wraps a closure as a strategy.
pub struct FnStrategy<F> {
    f: F,
    tag: StrategyTag,
}

impl<F> FnStrategy<F>
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            tag: StrategyTag::Custom,
        }
    }

    pub fn tagged(f: F, tag: StrategyTag) -> Self {
        Self { f, tag }
    }
}

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        (self.f)(t, q, u)
    }
    fn tag(&self) -> StrategyTag {
        self.tag
    }
}

/// `inner + eps`.
pub struct Perturbed<S> {
    pub inner: S,
    pub eps: f64,
}

impl<S: Strategy> Strategy for Perturbed<S> {
    fn speed(&self, t: f64, q: f64, u: f64) -> f64 {
        self.inner.speed(t, q, u) + self.eps
    }
    fn tag(&self) -> StrategyTag {
        StrategyTag::Custom
    }
}
