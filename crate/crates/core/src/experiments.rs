//! Reproduction drivers: diversity-gain region, DMT curves and the
//! sampled-vs-closed-form comparison sweeps.

use serde::Serialize;

use crate::channels::ChannelParams;
use crate::error::{Error, Result};
use crate::mimo::{
    analytic_div_fidelity, analytic_general_fidelity, analytic_mux_fidelity, simulate_2x2_div,
    simulate_2x2_mux_with, MimoConfig, MAX_LAYERS,
};
use crate::par::Execution;
use crate::rng::Rng;
use crate::tensor::haar_state;

/// Uniform grid over `(η, ε, λ)`, endpoints included on every axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub eta_range: (f64, f64),
    pub eps_range: (f64, f64),
    pub lambda_range: (f64, f64),
}

impl GridSpec {
    /// `0 ≤ η ≤ 0.5`, `0 ≤ ε, λ ≤ 1`.
    pub fn standard(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            eta_range: (0.0, 0.5),
            eps_range: (0.0, 1.0),
            lambda_range: (0.0, 1.0),
        }
    }

    /// Zero-width grid collapsed onto one parameter point.
    pub fn point(p: &ChannelParams) -> Self {
        Self {
            points_per_axis: 2,
            eta_range: (p.eta, p.eta),
            eps_range: (p.eps, p.eps),
            lambda_range: (p.lambda, p.lambda),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 2 {
            return Err(Error::InvalidConfig(format!(
                "points_per_axis = {} must be at least 2",
                self.points_per_axis
            )));
        }
        for (name, (lo, hi)) in [
            ("eta", self.eta_range),
            ("eps", self.eps_range),
            ("lambda", self.lambda_range),
        ] {
            crate::error::check_unit(name, lo)?;
            crate::error::check_unit(name, hi)?;
            if lo > hi {
                return Err(Error::InvalidConfig(format!(
                    "{name} range ({lo}, {hi}) is reversed"
                )));
            }
        }
        Ok(())
    }

    pub fn total_points(&self) -> u64 {
        (self.points_per_axis as u64).pow(3)
    }

    fn axis(&self, (lo, hi): (f64, f64), k: usize) -> f64 {
        lo + (hi - lo) * (k as f64 / (self.points_per_axis - 1) as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionRow {
    pub eta: f64,
    pub eps: f64,
    pub lambda: f64,
    pub f_mux: f64,
    pub f_div: f64,
    /// 1 when cloning strictly beats multiplexing.
    pub gain: u8,
}

fn region_point(eta: f64, eps: f64, lambda: f64) -> RegionRow {
    let p = ChannelParams { eta, eps, lambda };
    let f_mux = analytic_mux_fidelity(&p, false).f11;
    let f_div = analytic_div_fidelity(&p).f11;
    RegionRow {
        eta,
        eps,
        lambda,
        f_mux,
        f_div,
        gain: u8::from(f_div > f_mux),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSummary {
    pub fraction: f64,
    pub gain_points: u64,
    pub grid_points: u64,
}

/// Fraction of the grid where cloning diversity beats multiplexing `F₁₁`.
/// Ties count as no gain.
pub fn region_scan(grid: &GridSpec) -> Result<RegionSummary> {
    region_scan_with(grid, Execution::default())
}

pub fn region_scan_with(grid: &GridSpec, exec: Execution) -> Result<RegionSummary> {
    grid.validate()?;
    let n = grid.points_per_axis;
    let counts = exec.map(n, |i| {
        let eta = grid.axis(grid.eta_range, i);
        let mut wins = 0u64;
        for j in 0..n {
            let eps = grid.axis(grid.eps_range, j);
            for k in 0..n {
                let lambda = grid.axis(grid.lambda_range, k);
                wins += u64::from(region_point(eta, eps, lambda).gain);
            }
        }
        wins
    });
    let gain_points: u64 = counts.into_iter().sum();
    let grid_points = grid.total_points();
    Ok(RegionSummary {
        fraction: gain_points as f64 / grid_points as f64,
        gain_points,
        grid_points,
    })
}

/// Per-point rows, `η` outermost and `λ` innermost.
pub fn region_rows(grid: &GridSpec) -> Result<impl Iterator<Item = RegionRow> + '_> {
    grid.validate()?;
    let n = grid.points_per_axis;
    Ok((0..n).flat_map(move |i| {
        (0..n).flat_map(move |j| {
            (0..n).map(move |k| {
                region_point(
                    grid.axis(grid.eta_range, i),
                    grid.axis(grid.eps_range, j),
                    grid.axis(grid.lambda_range, k),
                )
            })
        })
    }))
}

/// One point of a diversity–multiplexing tradeoff curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DmtPoint {
    pub m: usize,
    pub x: usize,
    pub streams: u64,
    pub diversity_order: u64,
    pub log2_streams: usize,
    pub fidelity: f64,
}

/// Closed-form fidelity for `x = 0..=m` with `η_i = eta0 / decay^i`.
///
/// The schedule is not required to decrease, so `decay ≤ 1` and the
/// noiseless limit are accepted.
pub fn dmt_sweep(m: usize, eps: f64, lambda: f64, eta0: f64, decay: f64) -> Result<Vec<DmtPoint>> {
    if m > MAX_LAYERS {
        return Err(Error::CapacityExceeded {
            what: "crosstalk layers",
            value: m,
            cap: MAX_LAYERS,
        });
    }
    (0..=m)
        .map(|x| {
            let cfg = MimoConfig::geometric(m, x, eps, lambda, eta0, decay, true)?;
            Ok(DmtPoint {
                m,
                x,
                streams: cfg.streams() as u64,
                diversity_order: cfg.diversity_order() as u64,
                log2_streams: m - x,
                fidelity: analytic_general_fidelity(&cfg).f11,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptParam {
    Eta,
    Eps,
    Lambda,
}

impl SweptParam {
    pub const ALL: [SweptParam; 3] = [SweptParam::Eta, SweptParam::Eps, SweptParam::Lambda];

    fn set(self, base: &ChannelParams, value: f64) -> ChannelParams {
        let mut p = *base;
        match self {
            SweptParam::Eta => p.eta = value,
            SweptParam::Eps => p.eps = value,
            SweptParam::Lambda => p.lambda = value,
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mux,
    Div,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub swept_param: SweptParam,
    pub value: f64,
    pub strategy: Strategy,
    pub engine: crate::mimo::Engine,
    pub fidelity: f64,
    pub stderr: Option<f64>,
    pub n_samples: Option<u64>,
}

/// Points per swept axis in [`mc_verify`].
pub const SWEEP_POINTS: usize = 21;

/// Sweeps each of `η`, `ε`, `λ` over `[0, 1]` with the other two held at
/// `base`, comparing closed forms with simulation: multiplexing sampled
/// with `n_mux` Haar draws, diversity exactly (one deterministic run).
///
/// Every sweep point reuses the same Haar draws, so the sampled column is
/// a smooth function of the swept parameter.
pub fn mc_verify(base: &ChannelParams, n_mux: u64, rng: &Rng) -> Result<Vec<VerifyRow>> {
    mc_verify_with(base, n_mux, rng, Execution::default())
}

pub fn mc_verify_with(
    base: &ChannelParams,
    n_mux: u64,
    rng: &Rng,
    exec: Execution,
) -> Result<Vec<VerifyRow>> {
    use crate::mimo::Engine;

    base.validate()?;
    let psi0 = haar_state(2, &mut rng.child(0))?;
    let samples = rng.child(1);
    let mut rows = Vec::with_capacity(SweptParam::ALL.len() * SWEEP_POINTS * 4);
    for swept in SweptParam::ALL {
        for k in 0..SWEEP_POINTS {
            let value = k as f64 / (SWEEP_POINTS - 1) as f64;
            let p = swept.set(base, value);
            let row = |strategy, engine, fidelity, stderr, n_samples| VerifyRow {
                swept_param: swept,
                value,
                strategy,
                engine,
                fidelity,
                stderr,
                n_samples,
            };
            let sampled = simulate_2x2_mux_with(&psi0, &p, n_mux, &samples, exec)?;
            let cloned = simulate_2x2_div(&psi0, &p)?;
            rows.push(row(
                Strategy::Mux,
                Engine::Analytic,
                analytic_mux_fidelity(&p, false).f11,
                None,
                None,
            ));
            rows.push(row(
                Strategy::Mux,
                Engine::Density,
                sampled.f11,
                sampled.stderr,
                Some(n_mux),
            ));
            rows.push(row(
                Strategy::Div,
                Engine::Analytic,
                analytic_div_fidelity(&p).f11,
                None,
                None,
            ));
            rows.push(row(
                Strategy::Div,
                Engine::Density,
                cloned.report.f11,
                Some(0.0),
                Some(1),
            ));
        }
    }
    Ok(rows)
}
