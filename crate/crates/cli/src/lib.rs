//! Experiment runner and verification suite for the `hedge` binary.
//!
//! A run is described by an [`ExperimentConfig`]: a named preset or a JSON
//! file, optionally patched with `path=value` overrides. Each run writes its
//! data as CSV, small JSON summaries and a [`RunManifest`].

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod verify;

pub use config::{preset, ExperimentConfig, ExperimentKind, InitialValues, Screen, PRESET_NAMES};
pub use error::{CliError, Result};
pub use experiments::{run, RunOutcome};
pub use output::{RunManifest, MANIFEST_FILE};
pub use verify::{run_verify, CheckResult, Fault, VerifyOptions, VerifyReport};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "HEDGE_THREADS";

/// Sizes the global worker pool from `HEDGE_THREADS` when it is set.
pub fn init_threads() -> Result<usize> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().map_err(|_| CliError::Config {
            path: THREADS_ENV.into(),
            reason: format!("expected a positive integer, got `{raw}`"),
        })?;
        if n == 0 {
            return Err(CliError::Config {
                path: THREADS_ENV.into(),
                reason: "must be positive".into(),
            });
        }
        // A pool that is already built keeps its size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(rayon::current_num_threads())
}
