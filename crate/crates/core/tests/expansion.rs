//! Expansion coefficients and strategies against unreduced expectations.

mod common;

use std::sync::Arc;

use common::{assert_close, fig1, fig3, fig5, fig7, rng};
use hedge_core::expansion::{
    f_coefficients, nu_prime, risk_neutral_cross_impact_speed, DeltaSubstitution,
    ExpansionCoefficients, ExpansionScale, NuHat,
};
use hedge_core::linear::optimal_speed_linear;
use hedge_core::market::CustomPayoff;
use hedge_core::quadrature::{gauss_legendre, integrate, Tolerance};
use hedge_core::{AuxiliaryProcessLaw, Exposure, LinearHedger, ModelParams, PayoffCurve, Strategy};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn call() -> Exposure {
    Exposure::call(100.0, 1.0)
}

fn coeffs(p: &ModelParams, e: &Exposure) -> ExpansionCoefficients {
    ExpansionCoefficients::new(p, e).unwrap()
}

fn scale(theta: f64) -> ExpansionScale {
    ExpansionScale::new(theta).unwrap()
}

fn w(p: &ModelParams, s: f64) -> f64 {
    2.0 * p.k + (2.0 * p.alpha - p.b) * (p.horizon - s)
}

/// `∫_t^T weight(s) E[∂_U g(s, Ũ_s) | Ũ_t = u] ds` without the martingale shortcut.
fn nested_delta_integral<F: Fn(f64) -> f64>(
    p: &ModelParams,
    curve: &PayoffCurve,
    t: f64,
    u: f64,
    weight: F,
) -> f64 {
    let law = AuxiliaryProcessLaw::from_params(p);
    integrate(
        |s| {
            let m = curve.method_at(s);
            weight(s) * law.expect(t, s, u, |x| curve.delta(s, x), &m).unwrap()
        },
        t,
        p.horizon,
        &[],
        Tolerance::relative(1e-12),
    )
    .unwrap()
}

fn nested_lambda1(p: &ModelParams, curve: &PayoffCurve, t: f64, u: f64) -> f64 {
    let m = 2.0 * p.alpha - p.b;
    -m / w(p, t) * nested_delta_integral(p, curve, t, u, |_| 1.0)
}

/// Delta part of `Λ1`, the whole of it when `μ = 0`.
fn nested_big_lambda1(p: &ModelParams, curve: &PayoffCurve, t: f64, u: f64) -> f64 {
    -p.rho * p.sigma * p.eta / w(p, t) * nested_delta_integral(p, curve, t, u, |s| w(p, s))
}

#[test]
fn f_coefficient_examples() {
    let p = fig7();
    for t in [0.0, 0.3, 1.0] {
        let (f0, f1, _) = f_coefficients(&p, t).unwrap();
        assert_eq!((f0, f1), (0.0, 0.0));
    }
    let drifted = ModelParams { mu: 0.1, ..p };
    assert_eq!(f_coefficients(&drifted, 1.0).unwrap(), (0.0, 0.0, -p.alpha));
}

#[test]
fn terminal_conditions_vanish() {
    for p in [fig7(), ModelParams { mu: 0.1, ..fig7() }] {
        let c = coeffs(&p, &call());
        let t = p.horizon;
        for u in [0.0, 1.0, 2.0] {
            for v in [
                c.f1(t).unwrap(),
                c.lambda0(t, u).unwrap(),
                c.lambda1(t, u).unwrap(),
                c.big_lambda0(t, u).unwrap(),
                c.big_lambda1(t, u).unwrap(),
                c.big_lambda2(t).unwrap(),
                c.f0(t).unwrap(),
            ] {
                assert!(v.abs() < 1e-12, "{v}");
            }
            assert_close(c.f2(t).unwrap(), -p.alpha, 1e-12, "f2(T)");
        }
    }
}

#[test]
fn lambda1_examples_and_nested_quadrature() {
    let p = fig3();
    let lin = coeffs(&p, &Exposure::linear(2.0));
    let m = 2.0 * p.alpha - p.b;
    assert_close(
        lin.lambda1(0.3, 5.0).unwrap(),
        -m * 0.7 * 2.0 / w(&p, 0.3),
        1e-15,
        "constant delta",
    );
    let c = coeffs(&p, &call());
    let curve = c.curve().clone();
    assert_close(
        c.lambda1(0.5, 1.0).unwrap(),
        nested_lambda1(&p, &curve, 0.5, 1.0),
        1e-6,
        "lambda1 nested",
    );
}

#[test]
fn big_lambda1_matches_nested_quadrature() {
    let p = fig5();
    let c = coeffs(&p, &call());
    let curve = c.curve().clone();
    assert_close(
        c.big_lambda1(0.3, 1.0).unwrap(),
        nested_big_lambda1(&p, &curve, 0.3, 1.0),
        1e-6,
        "Lambda1 nested",
    );
    let flat = ModelParams { rho: 0.0, ..p };
    let c = coeffs(&flat, &call());
    for (t, u) in [(0.0, 1.0), (0.5, 2.0), (1.0, 0.0)] {
        assert_eq!(c.big_lambda1(t, u).unwrap(), 0.0);
    }
}

#[test]
fn tower_reduction_holds_at_random_points() {
    let p = ModelParams {
        beta: 0.1,
        ..fig5()
    };
    let c = coeffs(&p, &call());
    let curve = c.curve().clone();
    let mut r = rng(99);
    for _ in 0..50 {
        let t = r.random_range(0.0..1.0);
        let u = r.random_range(-0.5..2.5);
        assert_close(
            c.lambda1(t, u).unwrap(),
            nested_lambda1(&p, &curve, t, u),
            1e-6,
            "lambda1",
        );
        assert_close(
            c.big_lambda1(t, u).unwrap(),
            nested_big_lambda1(&p, &curve, t, u),
            1e-6,
            "Lambda1",
        );
    }
}

#[test]
fn lambda0_matches_monte_carlo_over_the_factor() {
    let p = ModelParams { mu: 0.1, ..fig3() };
    let c = coeffs(&p, &call());
    let (x, wts) = gauss_legendre(32);
    let nodes: Vec<(f64, f64)> = x
        .iter()
        .zip(&wts)
        .map(|(xi, wi)| (0.5 * p.horizon * (xi + 1.0), 0.5 * p.horizon * wi))
        .collect();
    let mut r = rng(3);
    let n = 1_000_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let (mut u, mut prev, mut acc) = (1.0, 0.0, 0.0);
            for &(s, wt) in &nodes {
                let z: f64 = StandardNormal.sample(&mut r);
                u += p.beta * (s - prev) + p.eta * (s - prev).sqrt() * z;
                prev = s;
                let inner = c.lambda1(s, u).unwrap() + c.delta(s, u).unwrap();
                acc += wt * c.f1(s).unwrap() / (2.0 * p.k) * inner;
            }
            acc
        })
        .collect();
    let mean = hedge_core::stats::mean(&samples);
    let se = (hedge_core::stats::variance(&samples) / n as f64).sqrt();
    let v = c.lambda0(0.0, 1.0).unwrap();
    assert!((v - mean).abs() < 3.0 * se, "{v} vs {mean} ± {se}");
    let still = coeffs(&fig3(), &call());
    assert_eq!(still.lambda0(0.2, 1.0).unwrap(), 0.0);
}

#[test]
fn big_lambda2_examples() {
    let p = fig3();
    let c = coeffs(&p, &call());
    assert_eq!(c.big_lambda2(1.0).unwrap(), 0.0);
    let calm = coeffs(&ModelParams { sigma: 0.0, ..p }, &call());
    assert_eq!(calm.big_lambda2(0.4).unwrap(), 0.0);
}

#[test]
fn big_lambda0_examples() {
    let still = ModelParams { eta: 0.0, ..fig7() };
    let c = coeffs(&still, &call());
    assert_eq!(c.big_lambda0(0.2, 1.3).unwrap(), 0.0);
    let p = fig7();
    let lin = coeffs(&p, &Exposure::linear(3.0));
    assert_close(
        lin.big_lambda0(0.25, 1.0).unwrap(),
        -0.5 * p.eta * p.eta * 9.0 * 0.75,
        1e-13,
        "linear Lambda0",
    );
    let c = coeffs(&p, &call());
    for (t, u) in [(0.1, 1.0), (0.6, 0.2), (0.9, 1.7)] {
        let a = c.squared_delta_integral(t, u).unwrap();
        let b = c.squared_delta_integral_generic(t, u).unwrap();
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "t={t} u={u}: {a} {b}"
        );
    }
}

#[test]
fn nu_hat_reduces_to_base_and_terminal_forms() {
    let p = ModelParams { mu: 0.05, ..fig7() };
    let c = coeffs(&p, &call());
    for (t, q, u) in [(0.0, 0.0, 1.0), (0.4, -1.0, 1.5)] {
        assert_eq!(
            c.nu_hat(&scale(0.0), t, q, u).unwrap(),
            c.nu0(t, q).unwrap()
        );
    }
    let p = fig7();
    let c = coeffs(&p, &call());
    let theta = 0.7;
    assert_close(
        c.nu_hat(&scale(theta), 1.0, 0.0, 1.2).unwrap(),
        theta * p.c * c.delta(1.0, 1.2).unwrap() / (2.0 * p.k),
        1e-12,
        "terminal speed",
    );
}

#[test]
fn nu_hat_matches_quadrature_assembly() {
    let p = fig7();
    let c = coeffs(&p, &call());
    let curve = c.curve().clone();
    let (t, q, u) = (0.0, 0.0, 1.0);
    let delta = hedge_core::payoff::call_delta(&p, &call(), t, u).unwrap();
    let nu1 = (delta + nested_lambda1(&p, &curve, t, u)) / (2.0 * p.k);
    let nu2 = nested_big_lambda1(&p, &curve, t, u) / (2.0 * p.k);
    let want = p.c * nu1 + p.gamma * nu2;
    assert_close(
        c.nu_hat(&scale(1.0), t, q, u).unwrap(),
        want,
        1e-8,
        "assembled speed",
    );
}

#[test]
fn nu_prime_reduces_for_linear_and_far_out_of_the_money() {
    let p = fig1(1.0);
    let lin = PayoffCurve::new(&p, &Exposure::linear(1.5)).unwrap();
    let s = scale(0.6);
    for (t, q) in [(0.0, 0.0), (0.3, -0.4), (0.9, 1.0)] {
        let want = optimal_speed_linear(&p.scaled(0.6), 1.5, t, q).unwrap();
        let got = nu_prime(&p, &lin, &s, t, q, 7.0).unwrap();
        assert!((got - want).abs() < 1e-12);
    }
    let p = fig7();
    let curve = PayoffCurve::new(&p, &call()).unwrap();
    let hd = LinearHedger::new(&p, 0.0).unwrap();
    let (t, q) = (0.5, 0.8);
    let liquidation = (2.0 * hd.h2(t).unwrap() + p.b) * q / (2.0 * p.k);
    let got = nu_prime(&p, &curve, &scale(1.0), t, q, 1.0 - 20.0).unwrap();
    assert_close(got, liquidation, 1e-10, "zero-delta speed");
}

#[test]
fn strategies_agree_to_first_order() {
    let p = fig7();
    let c = coeffs(&p, &call());
    let (t, q, u) = (0.5, -1.0, 1.0);
    let gap = |theta: f64| {
        let s = scale(theta);
        (nu_prime(&p, c.curve(), &s, t, q, u).unwrap() - c.nu_hat(&s, t, q, u).unwrap()).abs()
            / theta
    };
    let (a, b) = (gap(0.1), gap(0.05));
    assert!(b / a <= 0.6, "{a} {b}");
}

#[test]
fn risk_neutral_speed_and_target() {
    let p = fig3();
    let c = coeffs(&p, &call());
    let mut r = rng(4);
    for _ in 0..20 {
        let (t, q, u) = (
            r.random_range(0.0..1.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.0..2.0),
        );
        let a = c.risk_neutral_speed(t, q, u).unwrap();
        let b = c.nu_hat(&scale(1.0), t, q, u).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }
    let none = ModelParams { c: 0.0, ..p };
    assert_eq!(
        risk_neutral_cross_impact_speed(&none, &call(), 0.3, 0.0, 1.4).unwrap(),
        0.0
    );
    let target = c.cross_impact_target(0.9, 3.0).unwrap();
    assert_close(target, 100.0 * 1e-3 / 0.09, 1e-9, "deep itm target");
    let stiff = coeffs(
        &ModelParams {
            alpha: p.alpha * 1e3,
            ..p
        },
        &call(),
    );
    let ratio = target / stiff.cross_impact_target(0.9, 3.0).unwrap();
    assert!((900.0..1200.0).contains(&ratio), "{ratio}");
}

#[test]
fn opposing_cross_impact_and_risk_terms() {
    let p = fig7();
    let c = coeffs(&p, &call());
    let t = 0.25 * p.horizon;
    let cross = p.c * c.nu1(t, 1.0).unwrap();
    let risk = p.gamma * c.nu2(t, 0.0, 1.0).unwrap();
    assert!(cross > 0.0, "{cross}");
    assert!(risk < 0.0, "{risk}");
}

#[test]
fn value_reduces_to_expected_payoff() {
    let p = fig7();
    let c = coeffs(&p, &call());
    let v = c.value(&scale(0.0), 0.3, 0.0, 1.1).unwrap();
    assert_eq!(v.total, c.g(0.3, 1.1).unwrap());
    let v = c.value(&scale(1.0), 1.0, 0.0, 1.4).unwrap();
    assert_close(v.total, c.g(1.0, 1.4).unwrap(), 1e-12, "terminal value");
}

#[test]
fn cross_impact_coefficient_is_the_theta_derivative_of_the_linear_value() {
    let p = ModelParams {
        gamma: 0.0,
        ..fig1(1.0)
    };
    let units = 2.0;
    let c = coeffs(&p, &Exposure::linear(units));
    let exact = |theta: f64, t: f64, q: f64, u: f64| {
        LinearHedger::new(&p.scaled(theta), units)
            .unwrap()
            .h(t, q)
            .unwrap()
            + units * u
    };
    let eps = 1e-2;
    for (t, q, u) in [(0.0, 0.0, 1.0), (0.4, -1.0, 2.0), (0.8, 0.5, 0.0)] {
        let fd = (exact(eps, t, q, u) - exact(-eps, t, q, u)) / (2.0 * eps);
        let h1 = c.value(&scale(1.0), t, q, u).unwrap().h1;
        assert_close(fd, p.c * h1, 1e-6, "c-coefficient");
    }
}

#[test]
fn first_order_coefficient_is_the_theta_derivative_with_risk_aversion() {
    let p = fig1(1.0);
    let units = 1.0;
    let c = coeffs(&p, &Exposure::linear(units));
    let exact = |theta: f64, t: f64, q: f64| {
        LinearHedger::new(&p.scaled(theta), units)
            .unwrap()
            .h(t, q)
            .unwrap()
    };
    let eps = 1e-4;
    for (t, q) in [(0.0, 0.0), (0.5, -1.0), (0.9, 0.7)] {
        let fd = (-3.0 * exact(0.0, t, q) + 4.0 * exact(eps, t, q) - exact(2.0 * eps, t, q))
            / (2.0 * eps);
        let v = c.value(&scale(1.0), t, q, 0.0).unwrap();
        let want = p.c * v.h1 + p.gamma * v.h2;
        assert!(
            (fd - want).abs() < 1e-6 * want.abs().max(1.0),
            "t={t} q={q}: {fd} {want}"
        );
    }
}

#[test]
fn custom_smooth_payoff_drives_the_strategies() {
    let p = fig7();
    let payoff = CustomPayoff::new(
        "soft call",
        |u: f64| 100.0 * (1.0 + (2.0 * (u - 1.0)).exp()).ln() / 2.0,
        1e4,
    )
    .with_derivative(|u: f64| 100.0 / (1.0 + (-2.0 * (u - 1.0)).exp()));
    let e = Exposure::CustomSmooth(payoff);
    let c = Arc::new(coeffs(&p, &e));
    let hat = NuHat::new(c.clone(), scale(1.0));
    let prime = DeltaSubstitution::from_coefficients(&c, scale(1.0)).unwrap();
    for (t, q, u) in [(0.0, 0.0, 1.0), (0.5, -0.5, 1.3)] {
        let (a, b) = (hat.speed(t, q, u), prime.speed(t, q, u));
        assert!(a.is_finite() && b.is_finite());
        assert!((a - b).abs() < 0.1 * a.abs().max(1.0), "{a} {b}");
    }
    let law = AuxiliaryProcessLaw::from_params(&p);
    let res = hedge_core::payoff::delta_martingale_check(&law, c.curve(), 0.1, 0.6, 0.9).unwrap();
    assert!(res.abs() < 1e-6, "{res:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coefficient_signs(
        sigma in 0.0f64..2.0,
        rho in -0.9f64..0.9,
        k in 1e-4f64..1e-1,
        b in 0.0f64..0.05,
        extra in 0.01f64..0.5,
        t in 0.0f64..=1.0,
        u in -1.0f64..3.0,
    ) {
        let p = ModelParams { sigma, rho, k, b, alpha: 0.5 * b + extra, ..fig7() };
        let c = coeffs(&p, &call());
        prop_assert!(c.big_lambda2(t).unwrap() <= 0.0);
        let d = c.delta(t, u).unwrap();
        let l1 = c.lambda1(t, u).unwrap();
        prop_assert!(l1 * d <= 0.0);
        let m = 2.0 * p.alpha - p.b;
        let bound = m * (1.0 - t) / w(&p, t) * 100.0;
        prop_assert!(l1.abs() <= bound * (1.0 + 1e-12));
    }
}
