use serde::{Deserialize, Serialize};

/// A point `(t, x, q, S, U)` of the controlled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub t: f64,
    pub x: f64,
    pub q: f64,
    pub s: f64,
    pub u: f64,
}

impl State {
    pub fn new(t: f64, x: f64, q: f64, s: f64, u: f64) -> Self {
        Self { t, x, q, s, u }
    }
}
