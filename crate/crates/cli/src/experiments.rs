//! The experiments behind each subcommand.
//!
//! Each `run_*` function writes its files through an [`OutputDir`] and returns
//! a summary. The compute helpers (`screened_paths`, `terminal_samples`,
//! `inventory_moments`) are public for in-process checks.

use std::sync::Arc;
use std::time::Instant;

use hedge_core::expansion::{
    DeltaSubstitution, ExpansionCoefficients, ExpansionScale, NuHat, RiskNeutralCrossImpact,
};
use hedge_core::market::{simulate_with, Increments, SimOptions};
use hedge_core::oracles::{theta_sweep, McConfig, SweepReport};
use hedge_core::{stats, Exposure, LinearHedger, LinearOptimal, PathBundle, Strategy, StrategyTag};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, Screen};
use crate::error::{CliError, Result};
use crate::output::{fmt_f64, OutputDir, RunManifest};
use crate::verify::{run_verify, VerifyOptions, VerifyReport};

/// Screening gives up after this many streams.
pub const MAX_SCREEN_STREAMS: u64 = 100_000;

/// Paths per chunk when accumulating inventory moments.
const STATS_CHUNK: usize = 256;

/// Builds the configured strategy on the effective (θ-scaled) model.
pub fn build_strategy(cfg: &ExperimentConfig) -> Result<Box<dyn Strategy>> {
    let params = cfg.effective_model();
    let coeffs = || -> Result<Arc<ExpansionCoefficients>> {
        Ok(Arc::new(ExpansionCoefficients::new(
            &params,
            &cfg.exposure,
        )?))
    };
    let unit = ExpansionScale::unit();
    Ok(match cfg.strategy_tag {
        StrategyTag::LinearOptimal => match cfg.exposure {
            Exposure::Linear { units } => Box::new(LinearOptimal::new(&params, units)?),
            _ => {
                return Err(CliError::Config {
                    path: "strategy_tag".into(),
                    reason: "linear_optimal needs a linear exposure".into(),
                })
            }
        },
        StrategyTag::ExpansionNuHat => Box::new(NuHat::new(coeffs()?, unit)),
        StrategyTag::DeltaSubstitution => Box::new(DeltaSubstitution::from_coefficients(
            coeffs()?.as_ref(),
            unit,
        )?),
        StrategyTag::RiskNeutralCrossImpact => Box::new(RiskNeutralCrossImpact::new(coeffs()?)),
        StrategyTag::Custom => {
            return Err(CliError::Config {
                path: "strategy_tag".into(),
                reason: "custom strategies are library-only".into(),
            })
        }
    })
}

/// Result of one subcommand.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub verify: Option<VerifyReport>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.verify.as_ref().is_none_or(|r| r.passed)
    }
}

/// Validates `cfg`, runs its experiment and writes the manifest.
pub fn run(cfg: &ExperimentConfig, verify_opts: &VerifyOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut verify = None;
    match cfg.experiment {
        ExperimentKind::LinearPath => {
            run_linear_path(cfg, &mut out)?;
        }
        ExperimentKind::Paths => {
            run_paths(cfg, &mut out)?;
        }
        ExperimentKind::Distribution => {
            run_distribution(cfg, &mut out)?;
        }
        ExperimentKind::Stats => {
            run_stats(cfg, &mut out)?;
        }
        ExperimentKind::SweepTheta => {
            run_sweep(cfg, &mut out)?;
        }
        ExperimentKind::Verify => {
            let report = run_verify(cfg, verify_opts);
            out.write_json("verify_report.json", &report)?;
            verify = Some(report);
        }
    }
    let manifest = RunManifest::new(cfg, &out, start.elapsed().as_secs_f64());
    manifest.write(out.root())?;
    Ok(RunOutcome { manifest, verify })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPathRow {
    pub t: f64,
    pub q_closed_form: f64,
    pub q_almgren_chriss: f64,
    /// `NaN` when the long-horizon level is undefined (`γσ² = 0`).
    pub q_long_horizon: f64,
}

pub fn linear_path_rows(cfg: &ExperimentConfig) -> Result<Vec<LinearPathRow>> {
    let params = cfg.effective_model();
    let units = match cfg.exposure {
        Exposure::Linear { units } => units,
        _ => {
            return Err(CliError::Config {
                path: "exposure".into(),
                reason: "linear-path needs a linear exposure".into(),
            })
        }
    };
    let hedger = LinearHedger::new(&params, units)?;
    let baseline = LinearHedger::new(&params, 0.0)?;
    let long = hedger.long_horizon_position().unwrap_or(f64::NAN);
    let q0 = cfg.initial.q;
    (0..=cfg.n_steps)
        .map(|i| {
            let t = if i == cfg.n_steps {
                params.horizon
            } else {
                params.horizon * i as f64 / cfg.n_steps as f64
            };
            Ok(LinearPathRow {
                t,
                q_closed_form: hedger.optimal_inventory(q0, t)?,
                q_almgren_chriss: baseline.optimal_inventory(q0, t)?,
                q_long_horizon: long,
            })
        })
        .collect()
}

pub fn run_linear_path(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Vec<LinearPathRow>> {
    let rows = linear_path_rows(cfg)?;
    out.write_csv(
        "linear_path.csv",
        &["t", "Q_closed_form", "Q_almgren_chriss", "Q_long_horizon"],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.q_closed_form),
                fmt_f64(r.q_almgren_chriss),
                fmt_f64(r.q_long_horizon),
            ]
        }),
    )?;
    if cfg.plot {
        out.write_bytes(
            "plot.gp",
            b"set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'Q'\n\
plot for [c=2:4] 'linear_path.csv' using 1:c with lines\n",
        )?;
    }
    Ok(rows)
}

fn strike(exposure: &Exposure) -> Option<f64> {
    match exposure {
        Exposure::BachelierCall { strike, .. } => Some(*strike),
        _ => None,
    }
}

fn terminal_qu(cfg: &ExperimentConfig, strategy: &dyn Strategy, stream: u64) -> Result<(f64, f64)> {
    let params = cfg.effective_model();
    let mut inc = Increments::new(cfg.seed, stream, false);
    let end = simulate_with(
        &params,
        strategy,
        &cfg.initial.state(),
        cfg.n_steps,
        &mut inc,
        &SimOptions::default(),
        |_| {},
    )?;
    Ok((end.state.q, end.state.u))
}

/// Streams selected by `cfg.screen`, in increasing order.
pub fn screened_streams(cfg: &ExperimentConfig, strategy: &dyn Strategy) -> Result<Vec<u64>> {
    if cfg.screen == Screen::None {
        return Ok((0..cfg.n_paths as u64).collect());
    }
    let params = cfg.effective_model();
    let k = strike(&cfg.exposure).ok_or_else(|| CliError::Config {
        path: "screen".into(),
        reason: "screening needs a strike".into(),
    })?;
    let gap = 2.0 * params.eta * params.horizon.sqrt();
    let keep = |u: f64| match cfg.screen {
        Screen::DeepItm => u - k > gap,
        Screen::DeepOtm => u - k < -gap,
        Screen::None => true,
    };
    let mut found = Vec::with_capacity(cfg.n_paths);
    for stream in 0..MAX_SCREEN_STREAMS {
        let (_, u) = terminal_qu(cfg, strategy, stream)?;
        if keep(u) {
            found.push(stream);
            if found.len() == cfg.n_paths {
                return Ok(found);
            }
        }
    }
    Err(CliError::ScreenExhausted {
        screen: format!("{:?}", cfg.screen),
        tried: MAX_SCREEN_STREAMS,
    })
}

/// Full paths for the configured (possibly screened) streams.
pub fn screened_paths(cfg: &ExperimentConfig) -> Result<Vec<PathBundle>> {
    let params = cfg.effective_model();
    let strategy = build_strategy(cfg)?;
    let streams = screened_streams(cfg, strategy.as_ref())?;
    streams
        .par_iter()
        .map(|&stream| {
            Ok(PathBundle::simulate(
                &params,
                strategy.as_ref(),
                &cfg.initial.state(),
                cfg.n_steps,
                cfg.seed,
                stream,
                false,
                &SimOptions::default(),
            )?)
        })
        .collect()
}

/// 1-based rank of each value, lowest first; ties keep input order.
pub fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        out[i] = r + 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path: usize,
    pub stream: u64,
    pub u_terminal: f64,
    pub q_terminal: f64,
    pub x_terminal: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub u_rank: usize,
    pub clamped_steps: usize,
}

pub fn run_paths(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Vec<PathSummary>> {
    let bundles = screened_paths(cfg)?;
    let strategy = build_strategy(cfg)?;
    let u_end: Vec<f64> = bundles.iter().map(|b| b.terminal_state().u).collect();
    let rank = ranks(&u_end);
    let mut summary = Vec::with_capacity(bundles.len());
    for (i, b) in bundles.iter().enumerate() {
        let end = b.terminal_state();
        let nu_end = strategy.speed(end.t, end.q, end.u);
        let rows = (0..=b.n_steps).map(|j| {
            let nu = if j < b.n_steps { b.nu_path[j] } else { nu_end };
            vec![
                fmt_f64(b.times[j]),
                fmt_f64(b.q_path[j]),
                fmt_f64(nu),
                fmt_f64(b.u_path[j]),
                fmt_f64(b.s_path[j]),
                fmt_f64(b.x_path[j]),
                rank[i].to_string(),
            ]
        });
        out.write_csv(
            &format!("path_{i}.csv"),
            &["t", "Q", "nu", "U", "S", "X", "u_rank"],
            rows,
        )?;
        summary.push(PathSummary {
            path: i,
            stream: b.stream,
            u_terminal: end.u,
            q_terminal: end.q,
            x_terminal: end.x,
            q_min: b.q_path.iter().copied().fold(f64::INFINITY, f64::min),
            q_max: b.q_path.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            u_rank: rank[i],
            clamped_steps: b.clamped_steps,
        });
    }
    out.write_csv(
        "paths_summary.csv",
        &[
            "path",
            "stream",
            "U_T",
            "Q_T",
            "X_T",
            "Q_min",
            "Q_max",
            "u_rank",
            "clamped_steps",
        ],
        summary.iter().map(|s| {
            vec![
                s.path.to_string(),
                s.stream.to_string(),
                fmt_f64(s.u_terminal),
                fmt_f64(s.q_terminal),
                fmt_f64(s.x_terminal),
                fmt_f64(s.q_min),
                fmt_f64(s.q_max),
                s.u_rank.to_string(),
                s.clamped_steps.to_string(),
            ]
        }),
    )?;
    if cfg.plot {
        let script = format!(
            "set datafile separator ','\nset key off\nset xlabel 't'\nset ylabel 'Q'\n\
set palette defined (1 'blue', {n} 'red')\n\
plot for [i=0:{last}] sprintf('path_%d.csv', i) using 1:2:7 with lines palette\n",
            n = bundles.len().max(2),
            last = bundles.len().saturating_sub(1)
        );
        out.write_bytes("plot.gp", script.as_bytes())?;
    }
    Ok(summary)
}

/// `(Q_T, U_T)` for streams `0..n_paths`.
pub fn terminal_samples(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let strategy = build_strategy(cfg)?;
    let strategy = strategy.as_ref();
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|stream| terminal_qu(cfg, strategy, stream))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n_paths: usize,
    pub spearman_q_u: f64,
    pub median_q: f64,
    pub mean_q: f64,
    pub std_q: f64,
    pub min_q: f64,
    pub max_q: f64,
}

pub fn summarize_distribution(samples: &[(f64, f64)]) -> DistributionSummary {
    let q: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let u: Vec<f64> = samples.iter().map(|s| s.1).collect();
    DistributionSummary {
        n_paths: q.len(),
        spearman_q_u: stats::spearman(&q, &u),
        median_q: stats::median(&q),
        mean_q: stats::mean(&q),
        std_q: stats::variance(&q).sqrt(),
        min_q: q.iter().copied().fold(f64::INFINITY, f64::min),
        max_q: q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn run_distribution(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<DistributionSummary> {
    let samples = terminal_samples(cfg)?;
    out.write_csv(
        "distribution.csv",
        &["path", "Q_T", "U_T"],
        samples
            .iter()
            .enumerate()
            .map(|(i, (q, u))| vec![i.to_string(), fmt_f64(*q), fmt_f64(*u)]),
    )?;
    let summary = summarize_distribution(&samples);
    out.write_json("distribution_summary.json", &summary)?;
    if cfg.plot {
        out.write_bytes(
            "plot.gp",
            b"set datafile separator ','\nset key off\nset xlabel 'U_T'\nset ylabel 'Q_T'\n\
plot 'distribution.csv' using 3:2 every ::1 with dots\n",
        )?;
    }
    Ok(summary)
}

/// Per-time count, mean and sum of squared deviations.
#[derive(Debug, Clone, PartialEq)]
struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn of_chunk(paths: &[Vec<f64>]) -> Self {
        let len = paths[0].len();
        let mut mean = Vec::with_capacity(len);
        let mut m2 = Vec::with_capacity(len);
        let mut column = vec![0.0; paths.len()];
        for j in 0..len {
            for (c, p) in column.iter_mut().zip(paths) {
                *c = p[j];
            }
            let m = stats::mean(&column);
            let dev: Vec<f64> = column.iter().map(|x| (x - m) * (x - m)).collect();
            mean.push(m);
            m2.push(stats::pairwise_sum(&dev));
        }
        Self {
            n: paths.len(),
            mean,
            m2,
        }
    }

    /// Pairwise update; equal means leave the mean untouched.
    fn merge(self, other: Self) -> Self {
        let n = self.n + other.n;
        let (na, nb) = (self.n as f64, other.n as f64);
        let mut mean = self.mean;
        let mut m2 = self.m2;
        for j in 0..mean.len() {
            let d = other.mean[j] - mean[j];
            mean[j] += d * nb / n as f64;
            m2[j] += other.m2[j] + d * d * na * nb / n as f64;
        }
        Self { n, mean, m2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InventoryStats {
    /// Index of the largest standard deviation; the first one on ties.
    pub fn std_peak(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.std.iter().enumerate() {
            if s > self.std[best] {
                best = i;
            }
        }
        best
    }
}

/// Sample mean and standard deviation of `Q_t` on the simulation grid.
pub fn inventory_moments(cfg: &ExperimentConfig) -> Result<InventoryStats> {
    let params = cfg.effective_model();
    let strategy = build_strategy(cfg)?;
    let strategy = strategy.as_ref();
    let init = cfg.initial.state();
    let chunks = cfg.n_paths.div_ceil(STATS_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * STATS_CHUNK;
            let hi = (lo + STATS_CHUNK).min(cfg.n_paths);
            let paths = (lo..hi)
                .map(|stream| {
                    let mut q = Vec::with_capacity(cfg.n_steps + 1);
                    let mut inc = Increments::new(cfg.seed, stream as u64, false);
                    simulate_with(
                        &params,
                        strategy,
                        &init,
                        cfg.n_steps,
                        &mut inc,
                        &SimOptions::default(),
                        |node| q.push(node.q),
                    )?;
                    Ok(q)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Moments::of_chunk(&paths))
        })
        .collect::<Result<_>>()?;
    let total = parts
        .into_iter()
        .reduce(Moments::merge)
        .expect("at least one chunk");
    let dt = params.horizon / cfg.n_steps as f64;
    let denom = (total.n.max(2) - 1) as f64;
    Ok(InventoryStats {
        times: (0..=cfg.n_steps)
            .map(|i| {
                if i == cfg.n_steps {
                    params.horizon
                } else {
                    i as f64 * dt
                }
            })
            .collect(),
        std: total.m2.iter().map(|m| (m / denom).sqrt()).collect(),
        mean: total.mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n_paths: usize,
    pub std_peak_time: f64,
    pub std_peak_value: f64,
    pub std_terminal: f64,
}

pub fn run_stats(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<StatsSummary> {
    let s = inventory_moments(cfg)?;
    out.write_csv(
        "stats.csv",
        &["t", "mean_Q", "std_Q"],
        (0..s.times.len())
            .map(|i| vec![fmt_f64(s.times[i]), fmt_f64(s.mean[i]), fmt_f64(s.std[i])]),
    )?;
    let peak = s.std_peak();
    let summary = StatsSummary {
        n_paths: cfg.n_paths,
        std_peak_time: s.times[peak],
        std_peak_value: s.std[peak],
        std_terminal: *s.std.last().expect("non-empty grid"),
    };
    out.write_json("stats_summary.json", &summary)?;
    if cfg.plot {
        out.write_bytes(
            "plot.gp",
            b"set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n\
plot 'stats.csv' using 1:2 with lines, '' using 1:3 with lines\n",
        )?;
    }
    Ok(summary)
}

pub fn run_sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<SweepReport> {
    let mc = McConfig::new(cfg.n_paths, cfg.n_steps, cfg.seed);
    let report = theta_sweep(
        &cfg.model,
        &cfg.exposure,
        &cfg.sweep_thetas,
        &cfg.initial.state(),
        &mc,
    )?;
    out.write_csv(
        "sweep.csv",
        &[
            "theta",
            "ce_nu_hat",
            "ce_nu_prime",
            "gap",
            "gap_std_error",
            "gap_over_theta2",
            "noise_bounded",
        ],
        report.rows.iter().map(|r| {
            vec![
                fmt_f64(r.theta),
                fmt_f64(r.ce_nu_hat),
                fmt_f64(r.ce_nu_prime),
                fmt_f64(r.gap),
                fmt_f64(r.gap_std_error),
                fmt_f64(r.gap_over_theta2),
                r.noise_bounded.to_string(),
            ]
        }),
    )?;
    out.write_json("sweep_summary.json", &report)?;
    Ok(report)
}
