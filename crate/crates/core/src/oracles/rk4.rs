//! Classical RK4 integrated backward from a terminal condition.

use crate::error::{HedgeError, Result};
use crate::market::ModelParams;

/// `y' = rhs(t, y)` on `[start, horizon]` with `y(horizon) = terminal_value`.
pub struct OdeSystemSpec<F> {
    pub rhs: F,
    pub terminal_value: Vec<f64>,
    pub start: f64,
    pub horizon: f64,
    pub step_count: usize,
}

/// Grid solution with cubic Hermite interpolation between nodes.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    start: f64,
    h: f64,
    states: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl DenseSolution {
    pub fn nodes(&self) -> usize {
        self.states.len()
    }

    pub fn node(&self, i: usize) -> (f64, &[f64]) {
        (self.start + i as f64 * self.h, &self.states[i])
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let last = self.states.len() - 1;
        let x = ((t - self.start) / self.h).clamp(0.0, last as f64);
        let j = (x as usize).min(last - 1);
        let s = x - j as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let (a, b, c, d) = (
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        );
        (0..self.states[j].len())
            .map(|k| {
                a * self.states[j][k]
                    + b * self.h * self.slopes[j][k]
                    + c * self.states[j + 1][k]
                    + d * self.h * self.slopes[j + 1][k]
            })
            .collect()
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

pub fn rk4_backward<F>(spec: &OdeSystemSpec<F>) -> Result<DenseSolution>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = spec.step_count;
    if n == 0 || spec.horizon.partial_cmp(&spec.start) != Some(std::cmp::Ordering::Greater) {
        return Err(HedgeError::InvalidParameter {
            name: "step_count",
            reason: "need at least one step on a non-empty interval".into(),
        });
    }
    let h = (spec.horizon - spec.start) / n as f64;
    let f = &spec.rhs;
    let mut states = vec![Vec::new(); n + 1];
    let mut slopes = vec![Vec::new(); n + 1];
    states[n] = spec.terminal_value.clone();
    for i in (0..n).rev() {
        let t = spec.start + (i + 1) as f64 * h;
        let y = &states[i + 1];
        let k1 = f(t, y);
        let k2 = f(t - 0.5 * h, &axpy(y, -0.5 * h, &k1));
        let k3 = f(t - 0.5 * h, &axpy(y, -0.5 * h, &k2));
        let k4 = f(t - h, &axpy(y, -h, &k3));
        let next: Vec<f64> = (0..y.len())
            .map(|k| y[k] - h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(HedgeError::OdeBlowup { t: t - h });
        }
        slopes[i + 1] = k1;
        states[i] = next;
    }
    slopes[0] = f(spec.start, &states[0]);
    Ok(DenseSolution {
        start: spec.start,
        h,
        states,
        slopes,
    })
}

/// Riccati system for `(h0, h1, h2)` of the linear-exposure problem.
pub fn linear_riccati_spec(
    params: &ModelParams,
    units: f64,
    step_count: usize,
) -> OdeSystemSpec<impl Fn(f64, &[f64]) -> Vec<f64>> {
    let p = *params;
    let zeta = p.zeta(units);
    let cn = p.c * units;
    let level = p.beta * units - 0.5 * p.gamma * p.eta * p.eta * units * units;
    OdeSystemSpec {
        rhs: move |_t: f64, y: &[f64]| {
            let slope = 2.0 * y[2] + p.b;
            let lin = y[1] + cn;
            vec![
                -level - lin * lin / (4.0 * p.k),
                -zeta - slope * lin / (2.0 * p.k),
                0.5 * p.sigma * p.sigma * p.gamma - slope * slope / (4.0 * p.k),
            ]
        },
        terminal_value: vec![0.0, 0.0, -p.alpha],
        start: 0.0,
        horizon: p.horizon,
        step_count,
    }
}
