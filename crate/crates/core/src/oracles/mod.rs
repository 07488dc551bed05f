//! Independent numerical references for the closed forms and the expansion.

mod mc;
mod residual;
mod rk4;
mod sweep;

pub use mc::{mc_compare, mc_performance, McConfig, McEstimate, PairedEstimate};
pub use residual::{
    hjb_residual, pde_residual, sup_residual, ExpansionApprox, FdSteps, LinearExact, ProbeGrid,
    ResidualReport, ValueApprox,
};
pub use rk4::{linear_riccati_spec, rk4_backward, DenseSolution, OdeSystemSpec};
pub use sweep::{theta_sweep, SweepReport, SweepRow};
