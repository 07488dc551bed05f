//! Experiment configuration: JSON files, named presets and `--set` overrides.
//!
//! Configs are validated as a whole before anything runs. Every error names
//! the offending field by its dot path, e.g. `model.alpha`.

use std::path::{Path, PathBuf};

use hedge_core::{Exposure, HedgeError, ModelParams, State, StrategyTag};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LinearPath,
    Paths,
    Distribution,
    Stats,
    Verify,
    SweepTheta,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::LinearPath => "linear-path",
            ExperimentKind::Paths => "paths",
            ExperimentKind::Distribution => "distribution",
            ExperimentKind::Stats => "stats",
            ExperimentKind::Verify => "verify",
            ExperimentKind::SweepTheta => "sweep-theta",
        }
    }

    /// Preset used when no config file is given.
    pub fn default_preset(&self) -> &'static str {
        match self {
            ExperimentKind::LinearPath => "fig1_right",
            ExperimentKind::Paths => "fig3",
            ExperimentKind::Distribution => "fig4",
            ExperimentKind::Stats => "sample_stats",
            ExperimentKind::Verify => "verify",
            ExperimentKind::SweepTheta => "sweep",
        }
    }
}

/// Initial wealth, inventory, asset price and factor level at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialValues {
    pub x: f64,
    pub q: f64,
    pub s: f64,
    pub u: f64,
}

impl Default for InitialValues {
    fn default() -> Self {
        Self {
            x: 0.0,
            q: 0.0,
            s: 10.0,
            u: 1.0,
        }
    }
}

impl InitialValues {
    pub fn state(&self) -> State {
        State::new(0.0, self.x, self.q, self.s, self.u)
    }
}

/// Path selection for the `paths` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Screen {
    /// Streams `0, 1, …` in order.
    #[default]
    None,
    /// First streams with `U_T − K > 2η√T`.
    DeepItm,
    /// First streams with `U_T − K < −2η√T`.
    DeepOtm,
}

fn default_theta() -> f64 {
    1.0
}

fn default_sweep_thetas() -> Vec<f64> {
    vec![0.2, 0.1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelParams,
    pub exposure: Exposure,
    pub strategy_tag: StrategyTag,
    /// Cross impact and risk aversion are multiplied by `theta` everywhere.
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub initial: InitialValues,
    #[serde(default)]
    pub screen: Screen,
    #[serde(default = "default_sweep_thetas")]
    pub sweep_thetas: Vec<f64>,
    /// Also write a gnuplot script next to the data.
    #[serde(default)]
    pub plot: bool,
}

/// Master seed shared by every preset.
pub const MASTER_SEED: u64 = 42;

pub const PRESET_NAMES: [&str; 12] = [
    "fig1_left",
    "fig1_right",
    "fig3",
    "fig4",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "sample_stats",
    "degenerate",
    "sweep",
    "verify",
];

/// Linear-exposure parameter set; `horizon` is 0.5 or 3.
pub fn linear_params(horizon: f64) -> ModelParams {
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

/// Option parameter sets: risk neutral with cross impact.
pub fn option_params_risk_neutral() -> ModelParams {
    ModelParams {
        k: 1e-3,
        gamma: 0.0,
        horizon: 1.0,
        ..linear_params(1.0)
    }
}

/// Option parameter sets: risk averse without cross impact.
pub fn option_params_no_cross() -> ModelParams {
    ModelParams {
        c: 0.0,
        gamma: 1e-3,
        ..option_params_risk_neutral()
    }
}

/// Option parameter sets: both effects.
pub fn option_params_combined() -> ModelParams {
    ModelParams {
        c: 1e-3,
        gamma: 2e-3,
        ..option_params_risk_neutral()
    }
}

pub fn option_exposure() -> Exposure {
    Exposure::call(100.0, 1.0)
}

fn base(
    experiment: ExperimentKind,
    model: ModelParams,
    exposure: Exposure,
    strategy_tag: StrategyTag,
    n_paths: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        model,
        exposure,
        strategy_tag,
        theta: 1.0,
        n_paths,
        n_steps: 1000,
        seed: MASTER_SEED,
        output_dir: PathBuf::from("out"),
        initial: InitialValues::default(),
        screen: Screen::None,
        sweep_thetas: default_sweep_thetas(),
        plot: false,
    }
}

/// Named preset; the output directory defaults to `out/<name>`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use ExperimentKind::*;
    use StrategyTag::*;
    let call = option_exposure();
    let mut cfg = match name {
        "fig1_left" => base(
            LinearPath,
            linear_params(0.5),
            Exposure::linear(1.0),
            LinearOptimal,
            1,
        ),
        "fig1_right" => base(
            LinearPath,
            linear_params(3.0),
            Exposure::linear(1.0),
            LinearOptimal,
            1,
        ),
        "fig3" => base(
            Paths,
            option_params_risk_neutral(),
            call,
            RiskNeutralCrossImpact,
            5,
        ),
        "fig4" => base(
            Distribution,
            option_params_risk_neutral(),
            call,
            RiskNeutralCrossImpact,
            10_000,
        ),
        "fig5" => base(Paths, option_params_no_cross(), call, DeltaSubstitution, 5),
        "fig6" => base(
            Distribution,
            option_params_no_cross(),
            call,
            DeltaSubstitution,
            10_000,
        ),
        "fig7" => base(Paths, option_params_combined(), call, DeltaSubstitution, 5),
        "fig8" => base(
            Distribution,
            option_params_combined(),
            call,
            DeltaSubstitution,
            10_000,
        ),
        "sample_stats" => base(
            Stats,
            option_params_combined(),
            call,
            DeltaSubstitution,
            10_000,
        ),
        "degenerate" => base(
            Distribution,
            ModelParams {
                c: 0.0,
                ..option_params_risk_neutral()
            },
            call,
            DeltaSubstitution,
            1_000,
        ),
        "sweep" => base(
            SweepTheta,
            option_params_combined(),
            call,
            ExpansionNuHat,
            100_000,
        ),
        "verify" => base(
            Verify,
            option_params_combined(),
            call,
            ExpansionNuHat,
            100_000,
        ),
        other => {
            return Err(CliError::UnknownPreset {
                name: other.to_string(),
                known: PRESET_NAMES.join(", "),
            })
        }
    };
    if name == "degenerate" {
        cfg.initial.q = 1.0;
    }
    cfg.output_dir = PathBuf::from("out").join(name);
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_path_to_error::deserialize(value).map_err(|e| CliError::Config {
            path: e.path().to_string(),
            reason: e.into_inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Applies `path=value` overrides, e.g. `model.gamma=0.001`.
    ///
    /// The value is parsed as JSON and falls back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut root = self.to_value();
        for raw in overrides {
            let raw = raw.as_ref();
            let (path, value) = raw.split_once('=').ok_or_else(|| CliError::Config {
                path: raw.to_string(),
                reason: "override must look like path=value".into(),
            })?;
            set_path(&mut root, path.trim(), parse_value(value.trim()))?;
        }
        Self::from_value(root)
    }

    /// Effective model with `θ` applied.
    pub fn effective_model(&self) -> ModelParams {
        self.model.scaled(self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| scoped("model", e))?;
        self.exposure
            .validate()
            .map_err(|e| scoped("exposure", e))?;
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(field("theta", "must be finite and non-negative"));
        }
        if self.n_steps == 0 {
            return Err(field("n_steps", "must be positive"));
        }
        if self.n_paths == 0 {
            return Err(field("n_paths", "must be positive"));
        }
        let init = &self.initial;
        for (name, v) in [("x", init.x), ("q", init.q), ("s", init.s), ("u", init.u)] {
            if !v.is_finite() {
                return Err(field(&format!("initial.{name}"), "must be finite"));
            }
        }
        let linear = self.exposure.is_linear();
        let call = matches!(self.exposure, Exposure::BachelierCall { .. });
        match self.strategy_tag {
            StrategyTag::Custom => {
                return Err(field("strategy_tag", "custom strategies are library-only"));
            }
            StrategyTag::LinearOptimal if !linear => {
                return Err(field(
                    "strategy_tag",
                    "linear_optimal needs a linear exposure",
                ));
            }
            _ => {}
        }
        match self.experiment {
            ExperimentKind::LinearPath if !linear => {
                return Err(field("exposure", "linear-path needs a linear exposure"));
            }
            ExperimentKind::Paths if !call => {
                return Err(field("exposure", "paths needs a bachelier_call exposure"));
            }
            ExperimentKind::Distribution | ExperimentKind::Stats if self.n_paths < 1000 => {
                return Err(field("n_paths", "need at least 1000 paths"));
            }
            ExperimentKind::SweepTheta => {
                if self.n_paths < 4 || !self.n_paths.is_multiple_of(2) {
                    return Err(field(
                        "n_paths",
                        "antithetic sweep needs an even count of at least 4",
                    ));
                }
                let t = &self.sweep_thetas;
                if t.is_empty()
                    || t.iter().any(|x| !(x.is_finite() && *x >= 0.0))
                    || t.windows(2).any(|w| w[1] >= w[0])
                {
                    return Err(field(
                        "sweep_thetas",
                        "must be a non-empty strictly decreasing list of non-negative values",
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Same config with the output directory cleared; hashed into the manifest.
    pub fn hashable(&self) -> Value {
        let mut v = self.to_value();
        v["output_dir"] = Value::Null;
        v
    }
}

fn field(path: &str, reason: &str) -> CliError {
    CliError::Config {
        path: path.to_string(),
        reason: reason.to_string(),
    }
}

fn scoped(prefix: &str, e: HedgeError) -> CliError {
    match e {
        HedgeError::InvalidParameter { name, reason } => CliError::Config {
            path: format!("{prefix}.{name}"),
            reason,
        },
        other => CliError::Config {
            path: prefix.to_string(),
            reason: other.to_string(),
        },
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(field(path, "empty path segment"));
        }
        let obj = node.as_object_mut().ok_or_else(|| CliError::Config {
            path: parts[..i].join("."),
            reason: "not an object; cannot set a nested field".into(),
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one segment")
}
