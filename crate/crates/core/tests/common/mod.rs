#![allow(dead_code)]

use hedge_core::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fig1(horizon: f64) -> ModelParams {
    ModelParams {
        mu: 0.0,
        sigma: 1.0,
        beta: 0.0,
        eta: 1.0,
        rho: 0.5,
        b: 1e-2,
        c: 1e-3,
        k: 1e-2,
        gamma: 1.0,
        alpha: 0.05,
        horizon,
    }
}

/// Option parameter sets share impact constants and a unit horizon.
pub fn fig3() -> ModelParams {
    ModelParams {
        k: 1e-3,
        gamma: 0.0,
        horizon: 1.0,
        ..fig1(1.0)
    }
}

pub fn fig5() -> ModelParams {
    ModelParams {
        c: 0.0,
        gamma: 1e-3,
        ..fig3()
    }
}

pub fn fig7() -> ModelParams {
    ModelParams {
        c: 1e-3,
        gamma: 2e-3,
        ..fig3()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random parameters with `2α − b > 0` and `(2α − b)/k ≤ 60`, paired with a unit count.
pub fn random_linear_case(rng: &mut ChaCha8Rng) -> (ModelParams, f64) {
    let b = rng.random_range(0.0..0.05);
    let k = rng.random_range(1e-2..1e-1);
    let alpha = rng.random_range((0.5 * b + 0.01)..(0.5 * b + 0.3));
    let p = ModelParams {
        mu: rng.random_range(-0.5..0.5),
        sigma: rng.random_range(0.1..2.0),
        beta: rng.random_range(-0.5..0.5),
        eta: rng.random_range(0.1..2.0),
        rho: rng.random_range(-0.9..0.9),
        b,
        c: rng.random_range(-1e-2..1e-2),
        k,
        gamma: rng.random_range(0.0..2.0),
        alpha,
        horizon: rng.random_range(0.1..3.0),
    };
    p.validate().unwrap();
    (p, rng.random_range(-5.0..5.0))
}

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:e}, want {want:e}, diff {:e} > {tol:e}",
        (got - want).abs()
    );
}
