//! Optimal and approximately optimal hedging of a non-tradable risk factor by
//! trading a correlated asset under temporary, permanent and cross price impact.
//!
//! * [`linear`] solves the linear-exposure problem in closed form.
//! * [`expansion`] gives first-order coefficients and strategies for smooth exposures.
//! * [`oracles`] holds independent checks: RK4, Monte Carlo, PDE residuals.

pub mod error;
pub mod expansion;
pub mod linear;
pub mod market;
pub mod normal;
pub mod oracles;
pub mod payoff;
pub mod quadrature;
pub mod stats;
pub mod strategy;

pub use error::{HedgeError, Result};
pub use linear::{LinearHedger, LinearOptimal};
pub use market::{Exposure, ModelParams, PathBundle, State};
pub use payoff::{AuxiliaryProcessLaw, PayoffCurve};
pub use strategy::{Strategy, StrategyTag};
