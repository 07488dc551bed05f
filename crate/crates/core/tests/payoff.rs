//! Call closed forms and generic quadrature against independent references.

mod common;

use common::{assert_close, fig3, rng};
use hedge_core::market::{CustomPayoff, DEFAULT_DT_OFFSET};
use hedge_core::payoff::{
    call_delta, call_value, delta_martingale_check, generic_g, CallCurve, ExpectationMethod,
    DEFAULT_HERMITE_NODES,
};
use hedge_core::quadrature::LegendreRule;
use hedge_core::{AuxiliaryProcessLaw, Exposure, HedgeError, ModelParams, PayoffCurve};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

fn option_params(beta: f64) -> ModelParams {
    ModelParams { beta, ..fig3() }
}

#[test]
fn at_the_money_value_and_delta() {
    let p = option_params(0.0);
    let e = Exposure::call(100.0, 1.0);
    let tau = 1.0 + DEFAULT_DT_OFFSET - 0.25;
    let want = 100.0 * tau.sqrt() / (2.0 * PI).sqrt();
    assert_close(
        call_value(&p, &e, 0.25, 1.0).unwrap(),
        want,
        1e-12,
        "atm value",
    );
    assert_close(
        call_delta(&p, &e, 0.25, 1.0).unwrap(),
        50.0,
        1e-12,
        "atm delta",
    );
}

#[test]
fn deep_moneyness_asymptotes() {
    let p = option_params(0.0);
    let e = Exposure::call(100.0, 1.0);
    let sd = (1.0 + DEFAULT_DT_OFFSET - 0.5f64).sqrt();
    let u = 1.0 + 10.0 * sd;
    assert_close(
        call_value(&p, &e, 0.5, u).unwrap(),
        100.0 * (u - 1.0),
        1e-9,
        "deep itm",
    );
    assert_eq!(call_delta(&p, &e, 0.5, -1e3).unwrap(), 0.0);
    assert_eq!(call_delta(&p, &e, 0.5, 1e3).unwrap(), 100.0);
}

#[test]
fn call_value_matches_monte_carlo() {
    let p = option_params(0.0);
    let e = Exposure::call(100.0, 1.0);
    let (t, u) = (0.5, 1.2);
    let sd = (p.horizon + DEFAULT_DT_OFFSET - t).sqrt() * p.eta;
    let mut r = rng(5);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            100.0 * (u + sd * z - 1.0).max(0.0)
        })
        .collect();
    let mean = hedge_core::stats::mean(&draws);
    let se = (hedge_core::stats::variance(&draws) / n as f64).sqrt();
    let v = call_value(&p, &e, t, u).unwrap();
    assert!((v - mean).abs() < 3.0 * se, "{v} vs {mean} ± {se}");
}

#[test]
fn delta_matches_finite_differences() {
    let p = option_params(0.3);
    let e = Exposure::call(100.0, 1.0);
    let v = |t: f64, u: f64| call_value(&p, &e, t, u).unwrap();
    let h = 1e-5;
    let fd = (v(0.5, 1.2 + h) - v(0.5, 1.2 - h)) / (2.0 * h);
    assert!((fd - call_delta(&p, &e, 0.5, 1.2).unwrap()).abs() < 1e-4);
    for i in 0..10 {
        for j in 0..21 {
            let t = 0.09 * i as f64;
            let u = 0.0 + 0.1 * j as f64;
            let h = 1e-4;
            let fd = (v(t, u + h) - v(t, u - h)) / (2.0 * h);
            let d = call_delta(&p, &e, t, u).unwrap();
            assert!(
                (fd - d).abs() <= 1e-6 * d.abs().max(1.0),
                "t={t} u={u}: {fd} {d}"
            );
        }
    }
}

#[test]
fn time_beyond_horizon_and_wrong_exposure_fail() {
    let p = option_params(0.0);
    assert!(matches!(
        call_value(&p, &Exposure::call(1.0, 1.0), 1.5, 1.0),
        Err(HedgeError::TimeOutOfRange { .. })
    ));
    assert!(call_delta(&p, &Exposure::linear(1.0), 0.5, 1.0).is_err());
}

#[test]
fn generic_quadrature_moments() {
    let law = AuxiliaryProcessLaw::new(0.3, 0.8);
    let lin = CustomPayoff::new("id", |u| u, 0.0);
    let sq = CustomPayoff::new("square", |u| u * u, 0.0);
    let g = generic_g(&law, &lin, 1.0, 0.25, 2.0, DEFAULT_HERMITE_NODES).unwrap();
    assert_close(g, 2.0 + 0.3 * 0.75, 1e-12, "linear");
    let still = AuxiliaryProcessLaw::new(0.0, 0.8);
    let g = generic_g(&still, &sq, 1.0, 0.25, 2.0, DEFAULT_HERMITE_NODES).unwrap();
    assert_close(g, 4.0 + 0.64 * 0.75, 1e-12, "square");
}

#[test]
fn generic_quadrature_of_the_regularized_call() {
    let p = option_params(0.1);
    let curve = CallCurve::new(&p, 100.0, 1.0, DEFAULT_DT_OFFSET);
    let at_horizon = curve;
    let payoff = CustomPayoff::new("call at T", move |u| at_horizon.value(1.0, u), 1e8)
        .with_features(vec![1.0 - 0.1 * DEFAULT_DT_OFFSET]);
    let law = AuxiliaryProcessLaw::from_params(&p);
    for (t, u) in [(0.0, 1.0), (0.5, 1.2), (0.9, 0.7), (0.999, 1.0)] {
        let g = generic_g(&law, &payoff, 1.0, t, u, DEFAULT_HERMITE_NODES).unwrap();
        assert_close(g, curve.value(t, u), 1e-6, "smoothed call");
    }
}

#[test]
fn put_call_consistency() {
    let p = option_params(0.2);
    let e = Exposure::call(100.0, 1.0);
    let maturity = p.horizon + DEFAULT_DT_OFFSET;
    let law = AuxiliaryProcessLaw::from_params(&p);
    let put =
        CustomPayoff::new("put", |u| 100.0 * (1.0 - u).max(0.0), 0.0).with_features(vec![1.0]);
    for (t, u) in [(0.0, 1.0), (0.3, 0.4), (0.7, 1.9)] {
        let forward = 100.0 * (u + p.beta * (maturity - t) - 1.0);
        let lhs = call_value(&p, &e, t, u).unwrap() - forward;
        let rhs = generic_g(&law, &put, maturity, t, u, DEFAULT_HERMITE_NODES).unwrap();
        assert_close(lhs, rhs, 1e-6, "put-call");
    }
}

#[test]
fn delta_martingale_examples() {
    let p = option_params(0.0);
    let law = AuxiliaryProcessLaw::from_params(&p);
    let call = PayoffCurve::new(&p, &Exposure::call(100.0, 1.0)).unwrap();
    let lin = PayoffCurve::new(&p, &Exposure::linear(3.0)).unwrap();
    assert_eq!(
        delta_martingale_check(&law, &call, 0.4, 0.4, 1.3).unwrap(),
        0.0
    );
    assert_eq!(
        delta_martingale_check(&law, &lin, 0.0, 0.7, 1.3).unwrap(),
        0.0
    );
    assert!(
        delta_martingale_check(&law, &call, 0.0, 0.5, 1.0)
            .unwrap()
            .abs()
            < 1e-6
    );
    assert!(matches!(
        delta_martingale_check(&law, &call, 0.6, 0.5, 1.0),
        Err(HedgeError::Domain(_))
    ));
}

#[test]
fn delta_martingale_at_random_points() {
    let p = option_params(0.15);
    let law = AuxiliaryProcessLaw::from_params(&p);
    let call = PayoffCurve::new(&p, &Exposure::call(100.0, 1.0)).unwrap();
    let mut r = rng(17);
    for _ in 0..100 {
        let t = r.random_range(0.0..1.0);
        let s = r.random_range(t..=1.0);
        let u = r.random_range(-1.0..3.0);
        let res = delta_martingale_check(&law, &call, t, s, u).unwrap();
        assert!(res.abs() < 1e-6, "t={t} s={s} u={u}: {res:e}");
    }
}

#[test]
fn weighted_delta_integrals_collapse() {
    let p = option_params(0.1);
    let law = AuxiliaryProcessLaw::from_params(&p);
    let call = PayoffCurve::new(&p, &Exposure::call(100.0, 1.0)).unwrap();
    let rule = LegendreRule::new(64);
    for (t, u) in [(0.0, 1.0), (0.4, 0.6), (0.8, 1.3)] {
        for weight in [0usize, 1] {
            let f = |s: f64| if weight == 0 { 1.0 } else { s };
            let lhs = rule.integrate(
                |s| {
                    let m = call.method_at(s);
                    f(s) * law.expect(t, s, u, |x| call.delta(s, x), &m).unwrap()
                },
                t,
                1.0,
            );
            let rhs = call.delta(t, u) * rule.integrate(f, t, 1.0);
            assert_close(lhs, rhs, 1e-6, "weighted integral");
        }
    }
}

#[test]
fn transition_density_has_unit_mass() {
    let law = AuxiliaryProcessLaw::new(0.2, 0.5);
    let method = ExpectationMethod::adaptive(Vec::new());
    let mass = law.expect(0.0, 0.7, 1.0, |_| 1.0, &method).unwrap();
    assert!((mass - 1.0).abs() < 1e-8);
}

#[test]
fn value_approaches_payoff_near_horizon() {
    let p = option_params(0.0);
    let curve = CallCurve::new(&p, 100.0, 1.0, DEFAULT_DT_OFFSET);
    let e = Exposure::call(100.0, 1.0);
    for u in [0.5, 0.8, 1.2, 1.5] {
        assert_close(curve.value(1.0, u), e.payoff(u), 1e-9, "g(T) vs payoff");
    }
    assert_eq!(e.payoff(1.0), 0.0);
    assert_eq!(e.payoff(1.5), 50.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn delta_is_bounded_and_monotone(
        beta in -0.5f64..0.5,
        eta in 0.05f64..2.0,
        n in 1.0f64..200.0,
        t in 0.0f64..=1.0,
        u in -3.0f64..5.0,
        du in 0.0f64..1.0,
    ) {
        let p = ModelParams { beta, eta, ..fig3() };
        let c = CallCurve::new(&p, n, 1.0, DEFAULT_DT_OFFSET);
        let (d0, d1) = (c.delta(t, u), c.delta(t, u + du));
        prop_assert!((0.0..=n).contains(&d0));
        prop_assert!(d1 >= d0);
        prop_assert!(c.value(t, u) >= 0.0);
        prop_assert!(c.gamma(t, u) >= 0.0);
    }
}
