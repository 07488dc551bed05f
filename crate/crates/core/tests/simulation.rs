//! Euler scheme identities and reproducibility.

mod common;

use common::{assert_close, fig1};
use hedge_core::market::{
    payoff_eval, simulate_path, terminal_wealth, wealth_at, Increments, SimOptions,
};
use hedge_core::strategy::{ConstantSpeed, FnStrategy};
use hedge_core::{Exposure, LinearOptimal, ModelParams, PathBundle, State};
use proptest::prelude::*;

fn calm() -> ModelParams {
    ModelParams {
        mu: 0.0,
        sigma: 0.0,
        beta: 0.0,
        eta: 0.0,
        rho: 0.0,
        b: 0.0,
        c: 0.0,
        k: 1e-2,
        gamma: 1.0,
        alpha: 0.05,
        horizon: 1.0,
    }
}

#[test]
fn drift_only_path() {
    let p = ModelParams {
        mu: 0.1,
        beta: 0.3,
        ..calm()
    };
    let init = State::new(0.0, 2.0, 0.0, 10.0, 1.0);
    let end = simulate_path(&p, &ConstantSpeed(0.0), &init, 100, 1)
        .unwrap()
        .terminal_state();
    assert_close(end.s, 10.1, 1e-12, "S_T");
    assert_close(end.u, 1.3, 1e-12, "U_T");
    assert_eq!(end.x, 2.0);
}

#[test]
fn constant_speed_cost_identity() {
    let p = calm();
    let v = 0.75;
    let init = State::new(0.0, 1.0, 0.5, 10.0, 1.0);
    let end = simulate_path(&p, &ConstantSpeed(v), &init, 64, 1)
        .unwrap()
        .terminal_state();
    assert_close(end.x, 1.0 - (10.0 * v + p.k * v * v), 1e-12, "X_T");
    assert_close(end.q, 0.5 + v, 1e-12, "Q_T");
}

#[test]
fn euler_inventory_tracks_the_closed_form() {
    let p = fig1(3.0);
    let strat = LinearOptimal::new(&p, 1.0).unwrap();
    let n = 3000;
    let dt = p.horizon / n as f64;
    let path = simulate_path(&p, &strat, &State::new(0.0, 0.0, 0.0, 10.0, 1.0), n, 8).unwrap();
    let worst = path
        .times
        .iter()
        .zip(&path.q_path)
        .map(|(&t, &q)| (q - strat.hedger().optimal_inventory(0.0, t).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 10.0 * dt, "{worst}");
}

#[test]
fn wealth_and_payoff_examples() {
    let p = calm();
    let none = Exposure::linear(0.0);
    assert_eq!(
        wealth_at(&State::new(1.0, 1.0, 0.0, 42.0, 0.0), &p, &none),
        1.0
    );
    assert_close(
        wealth_at(&State::new(1.0, 0.0, 2.0, 10.0, 0.0), &p, &none),
        19.8,
        1e-12,
        "penalty",
    );
    assert_eq!(
        wealth_at(
            &State::new(1.0, 0.0, 0.0, 10.0, 5.0),
            &p,
            &Exposure::linear(3.0)
        ),
        15.0
    );
    assert_eq!(payoff_eval(&Exposure::linear(2.0), 3.0), 6.0);
    assert_eq!(payoff_eval(&Exposure::call(100.0, 1.0), 1.0), 0.0);
    assert_eq!(payoff_eval(&Exposure::call(100.0, 1.0), 1.5), 50.0);
    let path = simulate_path(
        &p,
        &ConstantSpeed(0.0),
        &State::new(0.0, 1.0, 0.0, 3.0, 0.0),
        4,
        0,
    )
    .unwrap();
    assert_eq!(terminal_wealth(&path, &p, &none), 1.0);
}

fn wavy(p: &ModelParams) -> impl Fn(f64, f64, f64) -> f64 + Send + Sync {
    let horizon = p.horizon;
    move |t, q, u| (3.0 * t / horizon).sin() - 0.5 * q + 0.1 * u
}

#[test]
fn factor_path_follows_its_recursion_exactly() {
    let p = fig1(1.0);
    let strat = FnStrategy::new(wavy(&p));
    let n = 200;
    let path = PathBundle::simulate(
        &p,
        &strat,
        &State::new(0.0, 0.0, 0.3, 10.0, 1.0),
        n,
        77,
        5,
        false,
        &SimOptions::default(),
    )
    .unwrap();
    let mut inc = Increments::new(77, 5, false);
    let dt = path.dt;
    let rho_bar = (1.0 - p.rho * p.rho).sqrt();
    for i in 0..n {
        let (e1, e2) = inc.next_pair();
        let dw = dt.sqrt() * e1;
        let dz = p.rho * dw + rho_bar * dt.sqrt() * e2;
        let next = path.u_path[i] + ((p.beta + p.c * path.nu_path[i]) * dt + p.eta * dz);
        assert_eq!(next, path.u_path[i + 1], "step {i}");
    }
    assert_eq!(path.nu_path.len(), n);
    assert_eq!(path.u_path.len(), n + 1);
}

#[test]
fn seed_determinism_and_serde_round_trip() {
    let p = fig1(1.0);
    let strat = FnStrategy::new(wavy(&p));
    let init = State::new(0.0, 0.0, 0.0, 10.0, 1.0);
    let a = simulate_path(&p, &strat, &init, 100, 123).unwrap();
    let b = simulate_path(&p, &strat, &init, 100, 123).unwrap();
    assert_eq!(a, b);
    let c = simulate_path(&p, &strat, &init, 100, 124).unwrap();
    assert_ne!(a.u_path, c.u_path);
    let text = serde_json::to_string(&a).unwrap();
    let back: PathBundle = serde_json::from_str(&text).unwrap();
    assert_eq!(a, back);
}

#[test]
fn antithetic_twin_negates_the_noise() {
    let p = ModelParams {
        mu: 0.0,
        beta: 0.0,
        ..fig1(1.0)
    };
    for (s0, u0, tol) in [(0.0, 0.0, 0.0), (10.0, 1.0, 1e-12)] {
        let init = State::new(0.0, 0.0, 0.0, s0, u0);
        let run = |anti| {
            PathBundle::simulate(
                &p,
                &ConstantSpeed(0.0),
                &init,
                50,
                9,
                2,
                anti,
                &SimOptions::default(),
            )
            .unwrap()
        };
        let (a, b) = (run(false), run(true));
        for i in 0..=50 {
            assert!(((a.s_path[i] - s0) + (b.s_path[i] - s0)).abs() <= tol);
            assert!(((a.u_path[i] - u0) + (b.u_path[i] - u0)).abs() <= tol);
        }
    }
}

#[test]
fn round_trip_leaves_no_cross_impact() {
    let p = ModelParams {
        c: 0.37,
        ..fig1(1.0)
    };
    let n = 1024;
    let strat = FnStrategy::new(|t: f64, _q, _u| if t < 0.5 { 2.0 } else { -2.0 });
    let path = simulate_path(&p, &strat, &State::new(0.0, 0.0, 0.25, 10.0, 1.0), n, 6).unwrap();
    let end = path.terminal_state();
    assert_eq!(end.q, 0.25);
    let z_t = path.z_path[n];
    let residual = end.u - 1.0 - p.eta * z_t - p.beta * p.horizon;
    assert!(residual.abs() < 1e-12, "{residual}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cash_and_inventory_are_sums_of_step_flows(
        seed in 0u64..1000,
        v in -3.0f64..3.0,
        slope in -2.0f64..2.0,
        n in 1usize..200,
        b in 0.0f64..0.05,
        c in -0.01f64..0.01,
    ) {
        let p = ModelParams { b, c, ..fig1(1.0) };
        let strat = FnStrategy::new(move |_t, q, _u| v + slope * q);
        let init = State::new(0.0, 1.5, -0.2, 10.0, 1.0);
        let path = simulate_path(&p, &strat, &init, n, seed).unwrap();
        let (mut x, mut q) = (init.x, init.q);
        for i in 0..n {
            let nu = path.nu_path[i];
            x -= (path.s_path[i] + p.k * nu) * nu * path.dt;
            q += nu * path.dt;
        }
        prop_assert_eq!(x, path.x_path[n]);
        prop_assert_eq!(q, path.q_path[n]);
    }

    #[test]
    fn clamping_is_counted(cap in 0.1f64..5.0, v in 5.5f64..50.0) {
        let p = fig1(1.0);
        let opts = SimOptions { nu_max: cap };
        let path = PathBundle::simulate(&p, &ConstantSpeed(v), &State::new(0.0, 0.0, 0.0, 10.0, 1.0), 20, 1, 0, false, &opts).unwrap();
        prop_assert_eq!(path.clamped_steps, 20);
        prop_assert!(path.nu_path.iter().all(|&nu| nu == cap));
    }
}
