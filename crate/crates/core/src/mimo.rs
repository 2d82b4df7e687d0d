//! Fidelity of multiplexing and cloning-based diversity over 2×2 and
//! 2^m×2^m MIMO links.
//!
//! Three engines compute the same quantities:
//!
//! * **analytic**: closed-form expressions;
//! * **density**: exact branch-ensemble simulation, capped at three crosstalk
//!   layers (eight modes);
//! * **trajectory**: Monte Carlo over swap, erasure and depolarizing events,
//!   usable up to [`MAX_LAYERS`].
//!
//! Layout of the 2^m channel model: stream `j` occupies modes
//! `[j·2^x, (j+1)·2^x)`. Crosstalk layer `i` pairs adjacent blocks of `2^i`
//! modes (block `2k` with `2k+1`) with strength `η_i`. Clones of one stream
//! therefore only leave their group at layers `i ≥ x`.

use std::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_pipeline, two_mode_link, BranchEnsemble, ChannelParams, Stage};
use crate::cloning::{clone_1to2, clone_1to_m, clone_fidelity_law};
use crate::error::{check_unit, Error, Result};
use crate::par::{Execution, Moments};
use crate::rng::Rng;
use crate::tensor::{haar_state, CMatrix, DensityMatrix, PureState, C64};

/// Largest number of crosstalk layers any engine accepts.
pub const MAX_LAYERS: usize = 20;
/// Largest number of crosstalk layers the density engine simulates.
pub const MAX_DENSITY_LAYERS: usize = 3;
/// Trajectories per independently seeded batch.
pub const TRAJECTORY_BATCH: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Density,
    Trajectory,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Density => "density",
            Engine::Trajectory => "trajectory",
        }
    }
}

/// Fidelities `F_{1,1}` (and `F_{1,2}` where defined) from one engine.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub f11: f64,
    pub f12: Option<f64>,
    pub engine: Engine,
    /// Standard error of `f11`, for sampled estimates.
    pub stderr: Option<f64>,
    /// `X = (1−λ)∏(1−η_i)` for the general closed form.
    pub x_factor: Option<f64>,
    pub n_samples: Option<u64>,
}

impl FidelityReport {
    fn exact(f11: f64, f12: Option<f64>, engine: Engine) -> Self {
        Self {
            f11,
            f12,
            engine,
            stderr: None,
            x_factor: None,
            n_samples: None,
        }
    }
}

/// Parameters of the 2^m×2^m model with `2^x` clones per stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MimoConfig {
    m: usize,
    x: usize,
    eta_schedule: Vec<f64>,
    eps: f64,
    lambda: f64,
}

impl MimoConfig {
    /// Validated config. The schedule must be strictly decreasing unless
    /// `allow_any_schedule` is set.
    pub fn new(
        m: usize,
        x: usize,
        eta_schedule: Vec<f64>,
        eps: f64,
        lambda: f64,
        allow_any_schedule: bool,
    ) -> Result<Self> {
        if m > MAX_LAYERS {
            return Err(Error::CapacityExceeded {
                what: "crosstalk layers",
                value: m,
                cap: MAX_LAYERS,
            });
        }
        if x > m {
            return Err(Error::InvalidConfig(format!("x = {x} exceeds m = {m}")));
        }
        if eta_schedule.len() != m {
            return Err(Error::InvalidConfig(format!(
                "eta schedule has {} entries, expected m = {m}",
                eta_schedule.len()
            )));
        }
        for &eta in &eta_schedule {
            check_unit("eta", eta)?;
        }
        check_unit("eps", eps)?;
        check_unit("lambda", lambda)?;
        if !allow_any_schedule && eta_schedule.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "eta schedule {eta_schedule:?} is not strictly decreasing"
            )));
        }
        Ok(Self {
            m,
            x,
            eta_schedule,
            eps,
            lambda,
        })
    }

    /// Schedule `η_i = eta0 / decay^i`.
    pub fn geometric(
        m: usize,
        x: usize,
        eps: f64,
        lambda: f64,
        eta0: f64,
        decay: f64,
        allow_any_schedule: bool,
    ) -> Result<Self> {
        Self::new(
            m,
            x,
            geometric_schedule(m, eta0, decay)?,
            eps,
            lambda,
            allow_any_schedule,
        )
    }

    /// The 2×2 link as a one-layer config.
    pub fn two_by_two(p: &ChannelParams, x: usize) -> Result<Self> {
        Self::new(1, x, vec![p.eta], p.eps, p.lambda, true)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn eta_schedule(&self) -> &[f64] {
        &self.eta_schedule
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_channels(&self) -> usize {
        1 << self.m
    }

    /// Clones per stream, `2^x`.
    pub fn diversity_order(&self) -> usize {
        1 << self.x
    }

    /// Independent streams, `2^(m−x)`.
    pub fn streams(&self) -> usize {
        1 << (self.m - self.x)
    }
}

pub fn geometric_schedule(m: usize, eta0: f64, decay: f64) -> Result<Vec<f64>> {
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "decay = {decay} must be positive"
        )));
    }
    check_unit("eta0", eta0)?;
    Ok((0..m).map(|i| eta0 / decay.powi(i as i32)).collect())
}

/// Closed-form multiplexing fidelities on the 2×2 link:
/// `F₁₁ = ½(1−ε)[1 + (1−η)(1−λ)]`, `F₁₂ = ½(1−ε)[1 + η(1−λ)]`.
///
/// With `csi_swap`, the receivers undo a likely swap: `η` becomes
/// `min(η, 1−η)` in `F₁₁` and `max(η, 1−η)` in `F₁₂`.
pub fn analytic_mux_fidelity(p: &ChannelParams, csi_swap: bool) -> FidelityReport {
    let (eta11, eta12) = if csi_swap {
        (p.eta.min(1.0 - p.eta), p.eta.max(1.0 - p.eta))
    } else {
        (p.eta, p.eta)
    };
    let half_kept = 0.5 * (1.0 - p.eps);
    let f11 = half_kept * (1.0 + (1.0 - eta11) * (1.0 - p.lambda));
    let f12 = half_kept * (1.0 + eta12 * (1.0 - p.lambda));
    FidelityReport::exact(f11, Some(f12), Engine::Analytic)
}

/// Closed-form cloning-diversity fidelity on the 2×2 link,
/// `(1−ε²)(5/6 − λ/3)`. Independent of `η`.
pub fn analytic_div_fidelity(p: &ChannelParams) -> FidelityReport {
    let f = (1.0 - p.eps * p.eps) * (5.0 / 6.0 - p.lambda / 3.0);
    FidelityReport::exact(f, Some(f), Engine::Analytic)
}

/// `(1−ε^{2^x}) [X·F_{1→2^x} + ½(1−X)]` with `X = (1−λ)∏_{i≥x}(1−η_i)`.
pub fn analytic_general_fidelity(cfg: &MimoConfig) -> FidelityReport {
    let survive: f64 = cfg.eta_schedule[cfg.x..]
        .iter()
        .map(|eta| 1.0 - eta)
        .product();
    let x_factor = (1.0 - cfg.lambda) * survive;
    let copies = cfg.diversity_order();
    let received = 1.0 - cfg.eps.powi(copies as i32);
    let f = received * (x_factor * clone_fidelity_law(copies as u64) + 0.5 * (1.0 - x_factor));
    FidelityReport {
        x_factor: Some(x_factor),
        ..FidelityReport::exact(f, None, Engine::Analytic)
    }
}

/// `Σ_branches p · ⟨ψ|ρ_mode|ψ⟩`, erased branches contributing zero.
fn mode_fidelity(ens: &BranchEnsemble, mode: usize, psi: &PureState) -> Result<f64> {
    ens.branches().iter().try_fold(0.0, |acc, b| {
        Ok(acc
            + match b.mode_state(mode)? {
                Some(rho) => b.prob * rho.fidelity(psi)?,
                None => 0.0,
            })
    })
}

/// Multiplexing on the 2×2 link with the interfering stream averaged
/// exactly: mode 1 starts in `I/2`.
pub fn simulate_2x2_mux_averaged(psi0: &PureState, p: &ChannelParams) -> Result<FidelityReport> {
    p.validate()?;
    let input = psi0
        .projector()
        .tensor(&DensityMatrix::maximally_mixed(2))?;
    let out = apply_pipeline(&BranchEnsemble::from_state(input, 2)?, &two_mode_link(p))?;
    Ok(FidelityReport::exact(
        mode_fidelity(&out, 0, psi0)?,
        Some(mode_fidelity(&out, 1, psi0)?),
        Engine::Density,
    ))
}

/// Multiplexing on the 2×2 link, sampling the second stream from the Haar
/// ensemble. Sample `k` draws from `rng.child(k)`.
pub fn simulate_2x2_mux(
    psi0: &PureState,
    p: &ChannelParams,
    n_samples: u64,
    rng: &Rng,
) -> Result<FidelityReport> {
    simulate_2x2_mux_with(psi0, p, n_samples, rng, Execution::default())
}

pub fn simulate_2x2_mux_with(
    psi0: &PureState,
    p: &ChannelParams,
    n_samples: u64,
    rng: &Rng,
    exec: Execution,
) -> Result<FidelityReport> {
    p.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be positive".into()));
    }
    let stages = two_mode_link(p);
    let samples = exec.map(n_samples as usize, |k| -> Result<(f64, f64)> {
        let mut local = rng.child(k as u64);
        let other = haar_state(2, &mut local)?;
        let input = psi0.tensor(&other)?.projector();
        let out = apply_pipeline(&BranchEnsemble::from_state(input, 2)?, &stages)?;
        Ok((mode_fidelity(&out, 0, psi0)?, mode_fidelity(&out, 1, psi0)?))
    });
    let (mut m11, mut m12) = (Moments::default(), Moments::default());
    for s in samples {
        let (a, b) = s?;
        m11.push(a);
        m12.push(b);
    }
    Ok(FidelityReport {
        f11: m11.mean,
        f12: Some(m12.mean),
        engine: Engine::Density,
        stderr: Some(m11.stderr()),
        x_factor: None,
        n_samples: Some(n_samples),
    })
}

/// Port a receiver relays for one branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Kept(usize),
    /// Every port was erased.
    Erased,
}

/// Keeps the lowest-index unerased port of each branch.
pub fn receiver_select(ens: &BranchEnsemble, ports: Range<usize>) -> Vec<Selection> {
    let order: Vec<usize> = ports.collect();
    receiver_select_ordered(ens, &order)
}

/// Keeps the first unerased port in `priority` order.
pub fn receiver_select_ordered(ens: &BranchEnsemble, priority: &[usize]) -> Vec<Selection> {
    ens.branches()
        .iter()
        .map(|b| {
            priority
                .iter()
                .copied()
                .find(|&port| !b.is_erased(port))
                .map_or(Selection::Erased, Selection::Kept)
        })
        .collect()
}

/// Result of relaying one port per branch.
#[derive(Clone, Debug)]
pub struct Reception {
    /// Average fidelity, erased branches counting zero.
    pub fidelity: f64,
    /// Probability that some port survived.
    pub received_prob: f64,
    /// Relayed single-mode state conditioned on reception.
    pub received_state: Option<DensityMatrix>,
}

fn receive(ens: &BranchEnsemble, priority: &[usize], psi: &PureState) -> Result<Reception> {
    let selections = receiver_select_ordered(ens, priority);
    let mut fidelity = 0.0;
    let mut received_prob = 0.0;
    let mut acc = CMatrix::zeros(2, 2);
    for (branch, sel) in ens.branches().iter().zip(selections) {
        let Selection::Kept(port) = sel else { continue };
        let rho = branch
            .mode_state(port)?
            .expect("selected port survived in its branch");
        fidelity += branch.prob * rho.fidelity(psi)?;
        received_prob += branch.prob;
        acc += rho.matrix() * C64::from(branch.prob);
    }
    let received_state =
        (received_prob > 0.0).then(|| DensityMatrix::from_raw(acc / C64::from(received_prob)));
    Ok(Reception {
        fidelity,
        received_prob,
        received_state,
    })
}

/// Exact 2×2 diversity run: two clones through the link, one relayed.
#[derive(Clone, Debug)]
pub struct DiversityOutcome {
    pub report: FidelityReport,
    pub reception: Reception,
}

/// Cloning-based diversity on the 2×2 link. Deterministic: the clones are
/// swap-symmetric and the remaining noise is isotropic.
///
/// `f11` relays port 0 when both clones arrive, `f12` prefers port 1.
pub fn simulate_2x2_div(psi0: &PureState, p: &ChannelParams) -> Result<DiversityOutcome> {
    p.validate()?;
    let clones = clone_1to2(psi0)?;
    let out = apply_pipeline(
        &BranchEnsemble::from_state(clones.into_joint(), 2)?,
        &two_mode_link(p),
    )?;
    let first = receive(&out, &[0, 1], psi0)?;
    let second = receive(&out, &[1, 0], psi0)?;
    Ok(DiversityOutcome {
        report: FidelityReport::exact(first.fidelity, Some(second.fidelity), Engine::Density),
        reception: first,
    })
}

/// Stages of the 2^m model: layered crosstalk, then erasure and depolarizing
/// noise on every mode.
pub fn general_stages(cfg: &MimoConfig) -> Vec<Stage> {
    let n = cfg.n_channels();
    let mut stages = Vec::new();
    for (layer, &eta) in cfg.eta_schedule.iter().enumerate() {
        let block = 1 << layer;
        for start in (0..n).step_by(2 * block) {
            stages.push(Stage::Crosstalk {
                eta,
                block_a: start..start + block,
                block_b: start + block..start + 2 * block,
            });
        }
    }
    stages.extend(Stage::erase_each(cfg.eps, 0..n));
    stages.extend(Stage::depolarize_each(cfg.lambda, 0..n));
    stages
}

/// Exact simulation of one stream in the 2^m model.
///
/// The target stream's clones sit in modes `[0, 2^x)`. Every other mode
/// starts in `I/2`: each crosstalk branch permutes modes, so other streams
/// reach the target's ports only through their Haar-averaged single-mode
/// marginal.
pub fn simulate_general_density(cfg: &MimoConfig, psi0: &PureState) -> Result<FidelityReport> {
    if cfg.m > MAX_DENSITY_LAYERS {
        return Err(Error::CapacityExceeded {
            what: "crosstalk layers for the density engine",
            value: cfg.m,
            cap: MAX_DENSITY_LAYERS,
        });
    }
    let copies = cfg.diversity_order();
    let n = cfg.n_channels();
    let clones = clone_1to_m(psi0, copies)?.into_joint();
    let input = if n > copies {
        clones.tensor(&DensityMatrix::maximally_mixed(1 << (n - copies)))?
    } else {
        clones
    };
    let out = apply_pipeline(&BranchEnsemble::from_state(input, n)?, &general_stages(cfg))?;
    let ports: Vec<usize> = (0..copies).collect();
    let reception = receive(&out, &ports, psi0)?;
    Ok(FidelityReport::exact(
        reception.fidelity,
        None,
        Engine::Density,
    ))
}

/// Monte Carlo estimate of the 2^m model fidelity.
///
/// Each trajectory samples, for the target's ports:
/// * one Bernoulli(`η_i`) swap per layer `i ≥ x`, tracking which group's
///   content ends up on them (layers below `x` only permute clones among
///   themselves);
/// * Bernoulli(`ε`) erasures until the first surviving port;
/// * Bernoulli(`λ`) depolarizing of the relayed port.
///
/// It scores `F_{1→2^x}` for an intact target clone, ½ for depolarized or
/// foreign content, and 0 when all ports are erased.
pub fn trajectory_estimate(cfg: &MimoConfig, n_samples: u64, rng: &Rng) -> Result<FidelityReport> {
    trajectory_estimate_with(cfg, n_samples, rng, Execution::default())
}

pub fn trajectory_estimate_with(
    cfg: &MimoConfig,
    n_samples: u64,
    rng: &Rng,
    exec: Execution,
) -> Result<FidelityReport> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be positive".into()));
    }
    let clone_fidelity = clone_fidelity_law(cfg.diversity_order() as u64);
    let n_batches = n_samples.div_ceil(TRAJECTORY_BATCH);
    let batches = exec.map(n_batches as usize, |b| {
        let b = b as u64;
        let size = TRAJECTORY_BATCH.min(n_samples - b * TRAJECTORY_BATCH);
        let mut local = rng.child(b);
        let mut moments = Moments::default();
        for _ in 0..size {
            moments.push(sample_trajectory(cfg, clone_fidelity, &mut local));
        }
        moments
    });
    let total = batches.into_iter().fold(Moments::default(), Moments::merge);
    Ok(FidelityReport {
        f11: total.mean,
        f12: None,
        engine: Engine::Trajectory,
        stderr: Some(total.stderr()),
        x_factor: None,
        n_samples: Some(n_samples),
    })
}

fn sample_trajectory(cfg: &MimoConfig, clone_fidelity: f64, rng: &mut Rng) -> f64 {
    // Group index whose content lands on ports [0, 2^x), walking layers
    // backwards from the receiver.
    let mut origin = 0usize;
    for layer in (cfg.x..cfg.m).rev() {
        if rng.random::<f64>() < cfg.eta_schedule[layer] {
            origin ^= 1 << (layer - cfg.x);
        }
    }
    let survived = (0..cfg.diversity_order()).any(|_| rng.random::<f64>() >= cfg.eps);
    if !survived {
        return 0.0;
    }
    if rng.random::<f64>() < cfg.lambda || origin != 0 {
        0.5
    } else {
        clone_fidelity
    }
}
