use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};

/// Market, impact and preference constants of the hedging problem.
///
/// The traded asset follows `dS = (mu + b·ν) dt + sigma dW`, the non-tradable
/// factor `dU = (beta + c·ν) dt + eta dZ` with `d<W,Z> = rho dt`. Trades pay
/// `S + k·ν` per share and terminal inventory is charged `alpha·Q_T²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu: f64,
    pub sigma: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho: f64,
    /// Permanent impact.
    pub b: f64,
    /// Cross impact of trading in `S` on the drift of `U`.
    pub c: f64,
    /// Temporary impact.
    pub k: f64,
    /// Risk aversion of the exponential utility.
    pub gamma: f64,
    /// Terminal liquidation penalty.
    pub alpha: f64,
    #[serde(alias = "T")]
    pub horizon: f64,
}

/// Constants that appear throughout the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// `2·alpha − b`, positive under the standing assumption.
    pub m: f64,
    /// `sqrt(k·gamma·sigma²/2)`.
    pub omega: f64,
    /// `omega + alpha − b/2`.
    pub phi_plus: f64,
    /// `omega − alpha + b/2`.
    pub phi_minus: f64,
}

impl ModelParams {
    /// Checks every parameter constraint, including `2·alpha − b > 0`.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("eta", self.eta),
            ("rho", self.rho),
            ("b", self.b),
            ("c", self.c),
            ("k", self.k),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("horizon", self.horizon),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.sigma < 0.0 {
            return Err(invalid("sigma", "must be non-negative".into()));
        }
        if self.eta < 0.0 {
            return Err(invalid("eta", "must be non-negative".into()));
        }
        if self.rho.abs() >= 1.0 {
            return Err(invalid(
                "rho",
                format!("|rho| must be < 1, got {}", self.rho),
            ));
        }
        if self.b < 0.0 {
            return Err(invalid("b", "permanent impact must be non-negative".into()));
        }
        if self.k <= 0.0 {
            return Err(invalid("k", "temporary impact must be positive".into()));
        }
        if self.gamma < 0.0 {
            return Err(invalid(
                "gamma",
                "risk aversion must be non-negative".into(),
            ));
        }
        if self.alpha <= 0.0 {
            return Err(invalid("alpha", "terminal penalty must be positive".into()));
        }
        if self.horizon <= 0.0 {
            return Err(invalid("horizon", "must be positive".into()));
        }
        if 2.0 * self.alpha - self.b <= 0.0 {
            return Err(HedgeError::Assumption(format!(
                "2·alpha − b > 0 is required (alpha={}, b={})",
                self.alpha, self.b
            )));
        }
        Ok(())
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn derived(&self) -> DerivedConstants {
        let m = 2.0 * self.alpha - self.b;
        let omega = (0.5 * self.k * self.gamma * self.sigma * self.sigma).sqrt();
        DerivedConstants {
            m,
            omega,
            phi_plus: omega + self.alpha - 0.5 * self.b,
            phi_minus: omega - self.alpha + 0.5 * self.b,
        }
    }

    /// Drift adjusted for the covariance with `units` of the non-tradable factor.
    pub fn zeta(&self, units: f64) -> f64 {
        self.mu - self.gamma * self.rho * self.sigma * self.eta * units
    }

    /// Parameters with cross impact and risk aversion multiplied by `theta`.
    pub fn scaled(&self, theta: f64) -> Self {
        Self {
            c: theta * self.c,
            gamma: theta * self.gamma,
            ..*self
        }
    }
}

fn invalid(name: &'static str, reason: String) -> HedgeError {
    HedgeError::InvalidParameter { name, reason }
}
