//! Euler scheme for `(W, Z, S, U, Q, X)` under a feedback strategy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Exposure, ModelParams, State};
use crate::error::{check_time, HedgeError, Result};
use crate::payoff::CallCurve;
use crate::strategy::{Strategy, StrategyTag};

/// Default cap on `|ν|`.
pub const DEFAULT_NU_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    /// Speeds are clamped to `[−nu_max, nu_max]`; each clamp is counted.
    pub nu_max: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            nu_max: DEFAULT_NU_MAX,
        }
    }
}

/// Gaussian increments for one path: stream `stream` of the master `seed`.
///
/// The antithetic twin replays the same stream with every draw negated.
pub struct Increments {
    rng: ChaCha8Rng,
    sign: f64,
}

impl Increments {
    pub fn new(seed: u64, stream: u64, antithetic: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            sign: if antithetic { -1.0 } else { 1.0 },
        }
    }

    /// Two independent standard normals `(for W, for B)`.
    #[inline]
    pub fn next_pair(&mut self) -> (f64, f64) {
        let a: f64 = StandardNormal.sample(&mut self.rng);
        let b: f64 = StandardNormal.sample(&mut self.rng);
        (self.sign * a, self.sign * b)
    }
}

/// Grid node handed to observers; `nu` is the speed used on the step that
/// starts here (NaN at the final node).
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub i: usize,
    pub t: f64,
    pub w: f64,
    pub z: f64,
    pub s: f64,
    pub u: f64,
    pub q: f64,
    pub x: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PathEnd {
    pub state: State,
    pub w: f64,
    pub z: f64,
    pub clamped: usize,
}

/// Runs the scheme from `initial` to the horizon, calling `observe` at every node.
pub fn simulate_with<S, O>(
    params: &ModelParams,
    strategy: &S,
    initial: &State,
    n_steps: usize,
    inc: &mut Increments,
    opts: &SimOptions,
    mut observe: O,
) -> Result<PathEnd>
where
    S: Strategy + ?Sized,
    O: FnMut(&Node),
{
    if n_steps == 0 {
        return Err(HedgeError::InvalidParameter {
            name: "n_steps",
            reason: "at least one step is required".into(),
        });
    }
    let horizon = params.horizon;
    let t0 = check_time(initial.t, 0.0, horizon)?;
    if t0 >= horizon {
        return Err(HedgeError::Domain(
            "initial time must precede the horizon".into(),
        ));
    }
    let dt = (horizon - t0) / n_steps as f64;
    let sdt = dt.sqrt();
    let rho_bar = (1.0 - params.rho * params.rho).sqrt();
    let ModelParams {
        mu,
        sigma,
        beta,
        eta,
        rho,
        b,
        c,
        k,
        ..
    } = *params;

    let State {
        mut x,
        mut q,
        mut s,
        mut u,
        ..
    } = *initial;
    let (mut w, mut z) = (0.0, 0.0);
    let mut clamped = 0;
    for i in 0..n_steps {
        let t = t0 + i as f64 * dt;
        let raw = strategy.speed(t, q, u);
        if !raw.is_finite() {
            return Err(HedgeError::NonFiniteSpeed {
                step: i,
                t,
                q,
                u,
                speed: raw,
            });
        }
        let nu = if raw.abs() > opts.nu_max {
            clamped += 1;
            raw.signum() * opts.nu_max
        } else {
            raw
        };
        observe(&Node {
            i,
            t,
            w,
            z,
            s,
            u,
            q,
            x,
            nu,
        });
        let (e1, e2) = inc.next_pair();
        let dw = sdt * e1;
        let dz = rho * dw + rho_bar * sdt * e2;
        x -= (s + k * nu) * nu * dt;
        q += nu * dt;
        s += (mu + b * nu) * dt + sigma * dw;
        u += (beta + c * nu) * dt + eta * dz;
        w += dw;
        z += dz;
    }
    observe(&Node {
        i: n_steps,
        t: horizon,
        w,
        z,
        s,
        u,
        q,
        x,
        nu: f64::NAN,
    });
    Ok(PathEnd {
        state: State::new(horizon, x, q, s, u),
        w,
        z,
        clamped,
    })
}

/// Full discretized trajectory of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub seed: u64,
    pub stream: u64,
    pub n_steps: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub w_path: Vec<f64>,
    pub z_path: Vec<f64>,
    pub s_path: Vec<f64>,
    pub u_path: Vec<f64>,
    pub q_path: Vec<f64>,
    pub x_path: Vec<f64>,
    pub nu_path: Vec<f64>,
    pub strategy_tag: StrategyTag,
    pub clamped_steps: usize,
}

impl PathBundle {
    /// Simulates stream `stream` of `seed`, optionally as the antithetic twin.
    #[allow(clippy::too_many_arguments)]
    pub fn simulate<S: Strategy + ?Sized>(
        params: &ModelParams,
        strategy: &S,
        initial: &State,
        n_steps: usize,
        seed: u64,
        stream: u64,
        antithetic: bool,
        opts: &SimOptions,
    ) -> Result<Self> {
        params.validate()?;
        let cap = n_steps + 1;
        let mut times = Vec::with_capacity(cap);
        let mut w_path = Vec::with_capacity(cap);
        let mut z_path = Vec::with_capacity(cap);
        let mut s_path = Vec::with_capacity(cap);
        let mut u_path = Vec::with_capacity(cap);
        let mut q_path = Vec::with_capacity(cap);
        let mut x_path = Vec::with_capacity(cap);
        let mut nu_path = Vec::with_capacity(n_steps);
        let mut inc = Increments::new(seed, stream, antithetic);
        let end = simulate_with(params, strategy, initial, n_steps, &mut inc, opts, |n| {
            times.push(n.t);
            w_path.push(n.w);
            z_path.push(n.z);
            s_path.push(n.s);
            u_path.push(n.u);
            q_path.push(n.q);
            x_path.push(n.x);
            if n.i < n_steps {
                nu_path.push(n.nu);
            }
        })?;
        Ok(Self {
            seed,
            stream,
            n_steps,
            dt: (params.horizon - initial.t) / n_steps as f64,
            times,
            w_path,
            z_path,
            s_path,
            u_path,
            q_path,
            x_path,
            nu_path,
            strategy_tag: strategy.tag(),
            clamped_steps: end.clamped,
        })
    }

    pub fn terminal_state(&self) -> State {
        let n = self.n_steps;
        State::new(
            self.times[n],
            self.x_path[n],
            self.q_path[n],
            self.s_path[n],
            self.u_path[n],
        )
    }
}

/// One path on stream 0 of `seed` with default options.
pub fn simulate_path<S: Strategy + ?Sized>(
    params: &ModelParams,
    strategy: &S,
    initial: &State,
    n_steps: usize,
    seed: u64,
) -> Result<PathBundle> {
    PathBundle::simulate(
        params,
        strategy,
        initial,
        n_steps,
        seed,
        0,
        false,
        &SimOptions::default(),
    )
}

/// Raw payoff `ψ(u)`; the call returns its intrinsic value.
pub fn payoff_eval(exposure: &Exposure, u: f64) -> f64 {
    exposure.payoff(u)
}

/// Exposure value credited at the horizon.
///
/// The call matures `dt_offset` after the horizon, so it is credited at its
/// value with that time remaining rather than at intrinsic.
pub fn terminal_payoff(params: &ModelParams, exposure: &Exposure, u: f64) -> f64 {
    match exposure {
        Exposure::BachelierCall {
            n_options,
            strike,
            dt_offset,
        } => CallCurve::new(params, *n_options, *strike, *dt_offset).value(params.horizon, u),
        other => other.payoff(u),
    }
}

/// `X_T + Q_T(S_T − α Q_T) + ψ(U_T)` at a terminal state.
pub fn wealth_at(state: &State, params: &ModelParams, exposure: &Exposure) -> f64 {
    state.x
        + state.q * (state.s - params.alpha * state.q)
        + terminal_payoff(params, exposure, state.u)
}

pub fn terminal_wealth(bundle: &PathBundle, params: &ModelParams, exposure: &Exposure) -> f64 {
    wealth_at(&bundle.terminal_state(), params, exposure)
}

/// `−exp(−γ·wealth)`.
pub fn utility_of(gamma: f64, wealth: f64) -> f64 {
    -(-gamma * wealth).exp()
}
