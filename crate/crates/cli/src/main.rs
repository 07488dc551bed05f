use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hedge_cli::{
    init_threads, preset, run, CliError, ExperimentConfig, ExperimentKind, Fault, VerifyOptions,
    PRESET_NAMES,
};

#[derive(Parser)]
#[command(
    name = "hedge",
    version,
    about = "Hedging experiments and verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form inventory for a linear exposure.
    LinearPath(RunArgs),
    /// A few simulated paths with a terminal-factor rank column.
    Paths(RunArgs),
    /// Terminal inventory against terminal factor level over many paths.
    Distribution(RunArgs),
    /// Sample mean and standard deviation of inventory over time.
    Stats(RunArgs),
    /// Run every verification check; exits nonzero on any failure.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Fault injection, e.g. `h2_bias=1e-3`.
        #[arg(long, hide = true)]
        fault: Option<String>,
    },
    /// Certainty-equivalent gap between the two approximate strategies as θ shrinks.
    SweepTheta(RunArgs),
    /// List the named presets.
    Presets,
    /// Print the resolved config as JSON without running it.
    ShowConfig {
        #[arg(value_parser = parse_kind)]
        experiment: ExperimentKind,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset; defaults to the one matching the subcommand.
    #[arg(long)]
    preset: Option<String>,
    /// Override a field by dot path, e.g. `--set model.gamma=0.001`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script.
    #[arg(long)]
    plot: bool,
}

fn parse_kind(raw: &str) -> Result<ExperimentKind, String> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|_| format!("unknown experiment `{raw}`"))
}

fn resolve(kind: ExperimentKind, args: &RunArgs) -> hedge_cli::Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => preset(kind.default_preset())?,
    };
    cfg.experiment = kind;
    let mut cfg = cfg.with_overrides(&args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.plot |= args.plot;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(kind: ExperimentKind, args: &RunArgs, opts: VerifyOptions) -> hedge_cli::Result<bool> {
    let threads = init_threads()?;
    let cfg = resolve(kind, args)?;
    eprintln!(
        "running {} into {} ({threads} threads)",
        kind.as_str(),
        cfg.output_dir.display()
    );
    let outcome = run(&cfg, &opts)?;
    if let Some(report) = &outcome.verify {
        for c in &report.checks {
            println!(
                "{} {:<26} measured={:<12.4e} {:>7.2}s  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.seconds,
                c.detail
            );
        }
        if !report.failed.is_empty() {
            println!("failed checks: {}", report.failed.join(", "));
        }
    }
    for f in &outcome.manifest.outputs {
        println!("wrote {}", cfg.output_dir.join(&f.name).display());
    }
    println!(
        "wrote {} ({:.2}s)",
        cfg.output_dir.join(hedge_cli::MANIFEST_FILE).display(),
        outcome.manifest.wall_clock_seconds
    );
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
        Command::ShowConfig { experiment, run } => resolve(experiment, &run).map(|cfg| {
            println!(
                "{}",
                serde_json::to_string_pretty(&cfg).expect("config serializes")
            );
            true
        }),
        Command::LinearPath(a) => execute(ExperimentKind::LinearPath, &a, VerifyOptions::default()),
        Command::Paths(a) => execute(ExperimentKind::Paths, &a, VerifyOptions::default()),
        Command::Distribution(a) => {
            execute(ExperimentKind::Distribution, &a, VerifyOptions::default())
        }
        Command::Stats(a) => execute(ExperimentKind::Stats, &a, VerifyOptions::default()),
        Command::SweepTheta(a) => execute(ExperimentKind::SweepTheta, &a, VerifyOptions::default()),
        Command::Verify { run, fault } => match fault.as_deref().map(Fault::parse) {
            Some(None) => Err(CliError::Config {
                path: "--fault".into(),
                reason: "expected h2_bias=<value>".into(),
            }),
            parsed => execute(
                ExperimentKind::Verify,
                &run,
                VerifyOptions {
                    fault: parsed.flatten(),
                },
            ),
        },
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (CliError::Config { .. } | CliError::UnknownPreset { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
