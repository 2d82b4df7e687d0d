//! Command-line and config-file parsing into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;
use qmimo::mimo::MAX_LAYERS;
use qmimo::Engine;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MUX_SAMPLES: u64 = 200;
pub const DEFAULT_TRAJECTORY_SAMPLES: u64 = 100_000;
pub const DEFAULT_POINTS_PER_AXIS: usize = 200;
/// Base value of the parameters held fixed in `simulate --sweep`.
pub const DEFAULT_SWEEP_BASE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mux,
    Div,
    General,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Mux => "mux",
            Mode::Div => "div",
            Mode::General => "general",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineArg {
    Analytic,
    Density,
    Trajectory,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Density => Engine::Density,
            EngineArg::Trajectory => Engine::Trajectory,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fidelity,
    Simulate,
    Region,
    Dmt,
    Verify,
}

#[derive(Parser, Debug)]
#[command(
    name = "qmimo",
    version,
    about = "Fidelity of diversity and multiplexing over noisy quantum MIMO links"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Closed-form (or engine-selected) fidelity for one configuration.
    Fidelity(Flags),
    /// Simulated fidelity; `--sweep` emits the sampled-vs-closed-form sweeps.
    Simulate(Flags),
    /// Fraction of the (η, ε, λ) grid where cloning beats multiplexing.
    Region(Flags),
    /// Diversity–multiplexing tradeoff curves for 1..=m layers.
    Dmt(Flags),
    /// Run the self-verification suite.
    Verify(Flags),
}

#[derive(Args, Debug, Default, Clone)]
struct Flags {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    x: Option<usize>,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    eta_schedule: Option<Vec<f64>>,
    #[arg(long)]
    n_samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    allow_any_schedule: bool,
    /// Let the receivers undo the swap when η > 0.5 (multiplexing only).
    #[arg(long)]
    csi_swap: bool,
    /// Replace the interfering stream by its Haar average instead of sampling.
    #[arg(long)]
    averaged: bool,
    /// Emit the three one-parameter verification sweeps.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    points_per_axis: Option<usize>,
    /// Write per-point region rows as CSV to this path.
    #[arg(long)]
    rows: Option<PathBuf>,
}

/// Optional JSON config with the same field names as the flags.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<Mode>,
    engine: Option<EngineArg>,
    eta: Option<f64>,
    eps: Option<f64>,
    lambda: Option<f64>,
    m: Option<usize>,
    x: Option<usize>,
    eta0: Option<f64>,
    decay: Option<f64>,
    #[serde(alias = "eta-schedule")]
    eta_schedule: Option<Vec<f64>>,
    #[serde(alias = "n-samples")]
    n_samples: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(alias = "allow-any-schedule")]
    allow_any_schedule: Option<bool>,
    #[serde(alias = "csi-swap")]
    csi_swap: Option<bool>,
    averaged: Option<bool>,
    sweep: Option<bool>,
    #[serde(alias = "points-per-axis")]
    points_per_axis: Option<usize>,
    rows: Option<PathBuf>,
}

/// Fully resolved run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub mode: Option<Mode>,
    pub engine: Option<Engine>,
    pub eta: Option<f64>,
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
    pub m: Option<usize>,
    pub x: Option<usize>,
    pub eta0: Option<f64>,
    pub decay: Option<f64>,
    pub eta_schedule: Option<Vec<f64>>,
    pub n_samples: Option<u64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub allow_any_schedule: bool,
    pub csi_swap: bool,
    pub averaged: bool,
    pub sweep: bool,
    pub points_per_axis: usize,
    pub rows: Option<PathBuf>,
}

impl RunConfig {
    pub fn require<T: Clone>(value: &Option<T>, field: &'static str) -> Result<T, CliError> {
        value.clone().ok_or(CliError::Missing { field })
    }
}

/// Parses `argv` (including the program name). Flags override values from
/// `--config`.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::from_clap)?;
    let (command, flags) = match cli.command {
        CliCommand::Fidelity(f) => (Command::Fidelity, f),
        CliCommand::Simulate(f) => (Command::Simulate, f),
        CliCommand::Region(f) => (Command::Region, f),
        CliCommand::Dmt(f) => (Command::Dmt, f),
        CliCommand::Verify(f) => (Command::Verify, f),
    };
    let file = match &flags.config {
        Some(path) => read_config(path)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig {
        command,
        mode: flags.mode.or(file.mode),
        engine: flags.engine.or(file.engine).map(Engine::from),
        eta: flags.eta.or(file.eta),
        eps: flags.eps.or(file.eps),
        lambda: flags.lambda.or(file.lambda),
        m: flags.m.or(file.m),
        x: flags.x.or(file.x),
        eta0: flags.eta0.or(file.eta0),
        decay: flags.decay.or(file.decay),
        eta_schedule: flags.eta_schedule.or(file.eta_schedule),
        n_samples: flags.n_samples.or(file.n_samples),
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        out: flags.out.or(file.out),
        threads: flags.threads.or(file.threads),
        allow_any_schedule: flags.allow_any_schedule || file.allow_any_schedule.unwrap_or(false),
        csi_swap: flags.csi_swap || file.csi_swap.unwrap_or(false),
        averaged: flags.averaged || file.averaged.unwrap_or(false),
        sweep: flags.sweep || file.sweep.unwrap_or(false),
        points_per_axis: flags
            .points_per_axis
            .or(file.points_per_axis)
            .unwrap_or(DEFAULT_POINTS_PER_AXIS),
        rows: flags.rows.or(file.rows),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn read_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        if e.to_string().contains("unknown field") {
            CliError::Usage(format!("config {}: {e}", path.display()))
        } else {
            CliError::Io(format!("config {}: {e}", path.display()))
        }
    })
}

fn unit(field: &'static str, value: Option<f64>) -> Result<(), CliError> {
    match value {
        Some(v) if !(0.0..=1.0).contains(&v) => Err(CliError::OutOfRange {
            field,
            value: v.to_string(),
            expected: "[0, 1]",
        }),
        _ => Ok(()),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    unit("eta", cfg.eta)?;
    unit("eps", cfg.eps)?;
    unit("lambda", cfg.lambda)?;
    unit("eta0", cfg.eta0)?;
    if let Some(schedule) = &cfg.eta_schedule {
        for &v in schedule {
            unit("eta-schedule", Some(v))?;
        }
    }
    if let Some(d) = cfg.decay {
        if !(d > 0.0 && d.is_finite()) {
            return Err(CliError::OutOfRange {
                field: "decay",
                value: d.to_string(),
                expected: "(0, inf)",
            });
        }
    }
    if let Some(m) = cfg.m {
        if m > MAX_LAYERS {
            return Err(CliError::OutOfRange {
                field: "m",
                value: m.to_string(),
                expected: "0..=20",
            });
        }
        if let Some(x) = cfg.x {
            if x > m {
                return Err(CliError::OutOfRange {
                    field: "x",
                    value: x.to_string(),
                    expected: "0..=m",
                });
            }
        }
    }
    if cfg.n_samples == Some(0) {
        return Err(CliError::OutOfRange {
            field: "n-samples",
            value: "0".into(),
            expected: ">= 1",
        });
    }
    if cfg.threads == Some(0) {
        return Err(CliError::OutOfRange {
            field: "threads",
            value: "0".into(),
            expected: ">= 1",
        });
    }
    if cfg.points_per_axis < 2 {
        return Err(CliError::OutOfRange {
            field: "points-per-axis",
            value: cfg.points_per_axis.to_string(),
            expected: ">= 2",
        });
    }
    check_required(cfg)
}

fn check_required(cfg: &RunConfig) -> Result<(), CliError> {
    let need_f = |v: Option<f64>, field| v.map(|_| ()).ok_or(CliError::Missing { field });
    match cfg.command {
        Command::Simulate if cfg.sweep => Ok(()),
        Command::Fidelity | Command::Simulate => {
            let mode = cfg.mode.ok_or(CliError::Missing { field: "mode" })?;
            need_f(cfg.eps, "eps")?;
            need_f(cfg.lambda, "lambda")?;
            match mode {
                Mode::Mux => need_f(cfg.eta, "eta"),
                Mode::Div => Ok(()),
                Mode::General => {
                    cfg.m.ok_or(CliError::Missing { field: "m" })?;
                    cfg.x.ok_or(CliError::Missing { field: "x" })?;
                    if cfg.eta_schedule.is_none() {
                        need_f(cfg.eta0, "eta0")?;
                        need_f(cfg.decay, "decay")?;
                    }
                    Ok(())
                }
            }
        }
        Command::Dmt => {
            cfg.m.ok_or(CliError::Missing { field: "m" })?;
            need_f(cfg.eps, "eps")?;
            need_f(cfg.lambda, "lambda")?;
            need_f(cfg.eta0, "eta0")?;
            need_f(cfg.decay, "decay")
        }
        Command::Region | Command::Verify => Ok(()),
    }
}
