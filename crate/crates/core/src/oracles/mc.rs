//! Monte Carlo estimates of the performance criterion `E[−exp(−γ W_T)]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};
use crate::market::{
    simulate_with, wealth_at, Exposure, Increments, ModelParams, SimOptions, State,
};
use crate::stats;
use crate::strategy::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Total simulated paths; even when `antithetic` is set.
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub antithetic: bool,
    #[serde(default)]
    pub sim: SimOptions,
}

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            seed,
            antithetic: true,
            sim: SimOptions::default(),
        }
    }

    fn samples(&self) -> Result<usize> {
        let per = if self.antithetic { 2 } else { 1 };
        if self.n_paths < 2 * per || !self.n_paths.is_multiple_of(per) {
            return Err(HedgeError::InvalidParameter {
                name: "n_paths",
                reason: format!(
                    "need at least {} paths{}",
                    2 * per,
                    if self.antithetic {
                        " and an even count"
                    } else {
                        ""
                    }
                ),
            });
        }
        Ok(self.n_paths / per)
    }
}

/// Sample mean of the criterion with its standard error.
///
/// With antithetic pairs the standard error is taken over pair averages. For
/// `γ = 0` the criterion is mean terminal wealth and `risk_neutral` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub risk_neutral: bool,
    /// `−ln(−mean)/γ`, or mean wealth when risk neutral.
    pub certainty_equivalent: f64,
    pub ce_std_error: f64,
    pub clamped_steps: usize,
}

/// Two strategies evaluated on common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedEstimate {
    pub first: McEstimate,
    pub second: McEstimate,
    /// `CE(first) − CE(second)`.
    pub gap: f64,
    pub gap_std_error: f64,
}

fn criterion(gamma: f64, wealth: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(wealth);
    }
    let arg = -gamma * wealth;
    if arg > 700.0 {
        return Err(HedgeError::Overflow(format!(
            "exp({arg}) overflows; use a smaller gamma or normalize wealth"
        )));
    }
    Ok(-arg.exp())
}

/// Criterion value for one sample and the number of clamped steps.
fn sample<S: Strategy + ?Sized>(
    params: &ModelParams,
    exposure: &Exposure,
    strategy: &S,
    initial: &State,
    cfg: &McConfig,
    index: usize,
) -> Result<(f64, usize)> {
    let run = |anti: bool| -> Result<(f64, usize)> {
        let mut inc = Increments::new(cfg.seed, index as u64, anti);
        let end = simulate_with(
            params,
            strategy,
            initial,
            cfg.n_steps,
            &mut inc,
            &cfg.sim,
            |_| {},
        )?;
        Ok((
            criterion(params.gamma, wealth_at(&end.state, params, exposure))?,
            end.clamped,
        ))
    };
    let (a, ca) = run(false)?;
    if cfg.antithetic {
        let (b, cb) = run(true)?;
        Ok((0.5 * (a + b), ca + cb))
    } else {
        Ok((a, ca))
    }
}

fn samples<S: Strategy + ?Sized>(
    params: &ModelParams,
    exposure: &Exposure,
    strategy: &S,
    initial: &State,
    cfg: &McConfig,
) -> Result<(Vec<f64>, usize)> {
    params.validate()?;
    exposure.validate()?;
    let n = cfg.samples()?;
    let out: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| sample(params, exposure, strategy, initial, cfg, i))
        .collect::<Result<_>>()?;
    let clamped = out.iter().map(|(_, c)| c).sum();
    Ok((out.into_iter().map(|(v, _)| v).collect(), clamped))
}

fn summarize(values: &[f64], gamma: f64, cfg: &McConfig, clamped: usize) -> Result<McEstimate> {
    let mean = stats::mean(values);
    let std_error = (stats::variance(values) / values.len() as f64).sqrt();
    let (ce, ce_se) = if gamma == 0.0 {
        (mean, std_error)
    } else {
        if mean.is_nan() || mean >= 0.0 {
            return Err(HedgeError::Overflow(format!(
                "criterion mean {mean} is not negative; utilities underflowed"
            )));
        }
        (-(-mean).ln() / gamma, std_error / (gamma * mean.abs()))
    };
    Ok(McEstimate {
        mean,
        std_error,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        risk_neutral: gamma == 0.0,
        certainty_equivalent: ce,
        ce_std_error: ce_se,
        clamped_steps: clamped,
    })
}

/// Estimates `E[−exp(−γ(X_T + Q_T(S_T − αQ_T) + ψ(U_T)))]` under `strategy`.
pub fn mc_performance<S: Strategy + ?Sized>(
    params: &ModelParams,
    exposure: &Exposure,
    strategy: &S,
    initial: &State,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let (values, clamped) = samples(params, exposure, strategy, initial, cfg)?;
    summarize(&values, params.gamma, cfg, clamped)
}

/// Both strategies on identical increments, with a delta-method error for the
/// certainty-equivalent gap.
pub fn mc_compare<A: Strategy + ?Sized, B: Strategy + ?Sized>(
    params: &ModelParams,
    exposure: &Exposure,
    first: &A,
    second: &B,
    initial: &State,
    cfg: &McConfig,
) -> Result<PairedEstimate> {
    let (va, ca) = samples(params, exposure, first, initial, cfg)?;
    let (vb, cb) = samples(params, exposure, second, initial, cfg)?;
    let gamma = params.gamma;
    let a = summarize(&va, gamma, cfg, ca)?;
    let b = summarize(&vb, gamma, cfg, cb)?;
    let n = va.len() as f64;
    let (ga, gb) = if gamma == 0.0 {
        (1.0, 1.0)
    } else {
        (1.0 / (gamma * a.mean.abs()), 1.0 / (gamma * b.mean.abs()))
    };
    let var = ga * ga * stats::variance(&va) + gb * gb * stats::variance(&vb)
        - 2.0 * ga * gb * stats::covariance(&va, &vb);
    Ok(PairedEstimate {
        first: a,
        second: b,
        gap: a.certainty_equivalent - b.certainty_equivalent,
        gap_std_error: (var.max(0.0) / n).sqrt(),
    })
}
