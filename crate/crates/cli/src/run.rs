//! Dispatch of a parsed [`RunConfig`] to the engines, with CSV/JSON output.

use std::fs::File;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use qmimo::experiments::{self, GridSpec};
use qmimo::mimo::{self, FidelityReport};
use qmimo::tensor::haar_state;
use qmimo::{ChannelParams, Engine, MimoConfig, Rng};

use crate::config::{
    Command, Mode, RunConfig, DEFAULT_MUX_SAMPLES, DEFAULT_SWEEP_BASE, DEFAULT_TRAJECTORY_SAMPLES,
};
use crate::error::CliError;
use crate::verify;

#[derive(Serialize)]
struct FidelityRow<'a> {
    mode: &'a str,
    engine: &'a str,
    f11: f64,
    f12: Option<f64>,
    stderr: Option<f64>,
    x_factor: Option<f64>,
    n_samples: Option<u64>,
}

#[derive(Serialize)]
struct RegionJson {
    fraction: f64,
    grid_points: u64,
    runtime_seconds: f64,
}

/// Runs the command and writes its output to `--out` or stdout.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = cfg.threads {
        qmimo::par::set_threads(n);
    }
    let bytes = match cfg.command {
        Command::Fidelity => fidelity_csv(cfg, Engine::Analytic)?,
        Command::Simulate if cfg.sweep => sweep_csv(cfg)?,
        Command::Simulate => fidelity_csv(cfg, Engine::Density)?,
        Command::Region => region(cfg)?,
        Command::Dmt => dmt_csv(cfg)?,
        Command::Verify => {
            let outcome = verify::run_suite(cfg.seed);
            emit(cfg, outcome.table.as_bytes())?;
            return match outcome.failures {
                0 => Ok(()),
                n => Err(CliError::VerifyFailed(n)),
            };
        }
    };
    emit(cfg, &bytes)
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(bytes))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn channel_params(cfg: &RunConfig) -> Result<ChannelParams, CliError> {
    let eta = cfg.eta.unwrap_or(0.0);
    let eps = RunConfig::require(&cfg.eps, "eps")?;
    let lambda = RunConfig::require(&cfg.lambda, "lambda")?;
    Ok(ChannelParams::new(eta, eps, lambda)?)
}

fn general_config(cfg: &RunConfig) -> Result<MimoConfig, CliError> {
    let m = RunConfig::require(&cfg.m, "m")?;
    let x = RunConfig::require(&cfg.x, "x")?;
    let eps = RunConfig::require(&cfg.eps, "eps")?;
    let lambda = RunConfig::require(&cfg.lambda, "lambda")?;
    let built = match &cfg.eta_schedule {
        Some(schedule) => {
            MimoConfig::new(m, x, schedule.clone(), eps, lambda, cfg.allow_any_schedule)
        }
        None => {
            let eta0 = RunConfig::require(&cfg.eta0, "eta0")?;
            let decay = RunConfig::require(&cfg.decay, "decay")?;
            MimoConfig::geometric(m, x, eps, lambda, eta0, decay, cfg.allow_any_schedule)
        }
    };
    Ok(built?)
}

/// Master stream of the run: child 0 draws the transmitted state, child 1
/// drives all sampling.
fn master(cfg: &RunConfig) -> Rng {
    Rng::new(cfg.seed, 0)
}

fn fidelity_report(cfg: &RunConfig, default_engine: Engine) -> Result<FidelityReport, CliError> {
    let mode = RunConfig::require(&cfg.mode, "mode")?;
    let engine = cfg.engine.unwrap_or(default_engine);
    if cfg.csi_swap && (mode != Mode::Mux || engine != Engine::Analytic) {
        return Err(CliError::Invalid(
            "--csi-swap applies only to --mode mux with --engine analytic".into(),
        ));
    }
    let rng = master(cfg);
    let psi0 = haar_state(2, &mut rng.child(0))?;
    let sampler = rng.child(1);
    let trajectory_n = cfg.n_samples.unwrap_or(DEFAULT_TRAJECTORY_SAMPLES);
    let report = match (mode, engine) {
        (Mode::Mux, Engine::Analytic) => {
            mimo::analytic_mux_fidelity(&channel_params(cfg)?, cfg.csi_swap)
        }
        (Mode::Mux, Engine::Density) if cfg.averaged => {
            mimo::simulate_2x2_mux_averaged(&psi0, &channel_params(cfg)?)?
        }
        (Mode::Mux, Engine::Density) => mimo::simulate_2x2_mux(
            &psi0,
            &channel_params(cfg)?,
            cfg.n_samples.unwrap_or(DEFAULT_MUX_SAMPLES),
            &sampler,
        )?,
        (Mode::Mux, Engine::Trajectory) => {
            let link = MimoConfig::two_by_two(&channel_params(cfg)?, 0)?;
            mimo::trajectory_estimate(&link, trajectory_n, &sampler)?
        }
        (Mode::Div, Engine::Analytic) => mimo::analytic_div_fidelity(&channel_params(cfg)?),
        (Mode::Div, Engine::Density) => {
            mimo::simulate_2x2_div(&psi0, &channel_params(cfg)?)?.report
        }
        (Mode::Div, Engine::Trajectory) => {
            let link = MimoConfig::two_by_two(&channel_params(cfg)?, 1)?;
            mimo::trajectory_estimate(&link, trajectory_n, &sampler)?
        }
        (Mode::General, Engine::Analytic) => mimo::analytic_general_fidelity(&general_config(cfg)?),
        (Mode::General, Engine::Density) => {
            mimo::simulate_general_density(&general_config(cfg)?, &psi0)?
        }
        (Mode::General, Engine::Trajectory) => {
            mimo::trajectory_estimate(&general_config(cfg)?, trajectory_n, &sampler)?
        }
    };
    Ok(report)
}

fn fidelity_csv(cfg: &RunConfig, default_engine: Engine) -> Result<Vec<u8>, CliError> {
    let report = fidelity_report(cfg, default_engine)?;
    let mode = RunConfig::require(&cfg.mode, "mode")?;
    csv_bytes([FidelityRow {
        mode: mode.as_str(),
        engine: report.engine.as_str(),
        f11: report.f11,
        f12: report.f12,
        stderr: report.stderr,
        x_factor: report.x_factor,
        n_samples: report.n_samples,
    }])
}

fn sweep_csv(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let base = ChannelParams::new(
        cfg.eta.unwrap_or(DEFAULT_SWEEP_BASE),
        cfg.eps.unwrap_or(DEFAULT_SWEEP_BASE),
        cfg.lambda.unwrap_or(DEFAULT_SWEEP_BASE),
    )?;
    let n = cfg.n_samples.unwrap_or(DEFAULT_MUX_SAMPLES);
    csv_bytes(experiments::mc_verify(&base, n, &master(cfg))?)
}

fn region(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let grid = GridSpec::standard(cfg.points_per_axis);
    let start = Instant::now();
    let summary = experiments::region_scan(&grid)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    if let Some(path) = &cfg.rows {
        let file =
            File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        for row in experiments::region_rows(&grid)? {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    let json = RegionJson {
        fraction: summary.fraction,
        grid_points: summary.grid_points,
        runtime_seconds,
    };
    let mut bytes = serde_json::to_vec(&json).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn dmt_csv(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let m = RunConfig::require(&cfg.m, "m")?;
    let eps = RunConfig::require(&cfg.eps, "eps")?;
    let lambda = RunConfig::require(&cfg.lambda, "lambda")?;
    let eta0 = RunConfig::require(&cfg.eta0, "eta0")?;
    let decay = RunConfig::require(&cfg.decay, "decay")?;
    let mut points = Vec::new();
    for layers in 1..=m {
        points.extend(experiments::dmt_sweep(layers, eps, lambda, eta0, decay)?);
    }
    csv_bytes(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_args;

    fn output(args: &str) -> Result<String, CliError> {
        let cfg = parse_args(std::iter::once("qmimo").chain(args.split_whitespace()))?;
        let bytes = match cfg.command {
            Command::Fidelity => fidelity_csv(&cfg, Engine::Analytic)?,
            Command::Simulate if cfg.sweep => sweep_csv(&cfg)?,
            Command::Simulate => fidelity_csv(&cfg, Engine::Density)?,
            Command::Region => region(&cfg)?,
            Command::Dmt => dmt_csv(&cfg)?,
            Command::Verify => unreachable!(),
        };
        Ok(String::from_utf8(bytes).unwrap())
    }

    fn f11(csv: &str) -> f64 {
        let line = csv.lines().nth(1).unwrap();
        line.split(',').nth(2).unwrap().parse().unwrap()
    }

    #[test]
    fn general_fidelity_example() {
        let out = output(
            "fidelity --mode general --m 3 --x 1 --eps 0.1 --lambda 0.1 --eta0 0.4 --decay 1.2",
        )
        .unwrap();
        assert!(out.starts_with("mode,engine,f11,f12,stderr,x_factor,n_samples\n"));
        assert!((f11(&out) - 0.638).abs() < 5e-6, "{out}");
    }

    #[test]
    fn engines_agree_on_the_2x2_link() {
        let a = f11(&output("fidelity --mode div --eps 0.2 --lambda 0.3 --eta 0.4").unwrap());
        let d = f11(&output("simulate --mode div --eps 0.2 --lambda 0.3 --eta 0.4").unwrap());
        assert!((a - d).abs() < 1e-10);
        let a = f11(&output("fidelity --mode mux --eps 0.2 --lambda 0.3 --eta 0.4").unwrap());
        let d = f11(
            &output("simulate --mode mux --averaged --eps 0.2 --lambda 0.3 --eta 0.4").unwrap(),
        );
        assert!((a - d).abs() < 1e-10);
    }

    #[test]
    fn density_capacity_error() {
        let e = output(
            "simulate --mode general --m 4 --x 1 --eps 0.1 --lambda 0.1 --eta0 0.4 --decay 1.2",
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 5);
        assert!(e.to_string().contains("trajectory"));
    }

    #[test]
    fn dmt_emits_every_layer_count() {
        let out = output("dmt --m 3 --eps 0.1 --lambda 0.1 --eta0 0.4 --decay 1.2").unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(
            lines[0],
            "m,x,streams,diversity_order,log2_streams,fidelity"
        );
        assert_eq!(lines.len(), 1 + 2 + 3 + 4);
    }

    #[test]
    fn sweep_has_all_rows() {
        let out = output("simulate --sweep --n-samples 4").unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(
            lines[0],
            "swept_param,value,strategy,engine,fidelity,stderr,n_samples"
        );
        assert_eq!(lines.len(), 1 + 3 * experiments::SWEEP_POINTS * 4);
    }

    #[test]
    fn csi_swap_rejected_outside_analytic_mux() {
        let e = output("simulate --mode mux --csi-swap --eta 0.9 --eps 0 --lambda 0").unwrap_err();
        assert_eq!(e.exit_code(), 7);
    }
}
