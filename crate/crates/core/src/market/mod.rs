//! Model parameters, exposures, states and the Euler path simulator.

mod exposure;
mod params;
mod sim;
mod state;

pub use exposure::{CustomPayoff, Exposure, DEFAULT_DT_OFFSET};
pub use params::{DerivedConstants, ModelParams};
pub use sim::{
    payoff_eval, simulate_path, simulate_with, terminal_payoff, terminal_wealth, utility_of,
    wealth_at, Increments, Node, PathBundle, PathEnd, SimOptions, DEFAULT_NU_MAX,
};
pub use state::State;
