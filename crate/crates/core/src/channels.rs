//! Crosstalk, erasure and depolarizing noise over branch ensembles.
//!
//! An erased mode is not embedded as a third level. Each branch of a
//! [`BranchEnsemble`] carries a bitmask of erased modes and a density matrix
//! over the surviving modes only, in increasing mode order. Crosstalk acts on
//! full registers and must run before any erasure.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::tensor::{qubit_permutation_map, CMatrix, DensityMatrix, C64};

/// Largest number of modes a branch mask can track.
pub const MAX_MODES: usize = 32;

/// Crosstalk strength, erasure probability and depolarizing strength of a
/// link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub eta: f64,
    pub eps: f64,
    pub lambda: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, eps: f64, lambda: f64) -> Result<Self> {
        let p = Self { eta, eps, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eta", self.eta)?;
        check_unit("eps", self.eps)?;
        check_unit("lambda", self.lambda)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub prob: f64,
    /// Bit `k` set when mode `k` has been erased.
    pub erased: u32,
    /// State of the surviving modes, in increasing mode order.
    pub state: DensityMatrix,
}

impl Branch {
    pub fn is_erased(&self, mode: usize) -> bool {
        self.erased >> mode & 1 == 1
    }

    /// Position of `mode` within the branch state, if it survived.
    pub fn local_index(&self, mode: usize) -> Option<usize> {
        if self.is_erased(mode) {
            return None;
        }
        let below = (1u32 << mode) - 1;
        Some(mode - (self.erased & below).count_ones() as usize)
    }

    /// Single-mode state of `mode`, if it survived.
    pub fn mode_state(&self, mode: usize) -> Result<Option<DensityMatrix>> {
        match self.local_index(mode) {
            Some(q) => self.state.qubit_marginal(q).map(Some),
            None => Ok(None),
        }
    }
}

/// Probability mixture over erasure patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    n_modes: usize,
    branches: Vec<Branch>,
}

impl BranchEnsemble {
    /// Single branch holding `state` over `n_modes` unerased qubit modes.
    pub fn from_state(state: DensityMatrix, n_modes: usize) -> Result<Self> {
        if n_modes > MAX_MODES {
            return Err(Error::CapacityExceeded {
                what: "modes",
                value: n_modes,
                cap: MAX_MODES,
            });
        }
        if state.n_qubits() != Some(n_modes) {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_modes,
                found: state.dim(),
            });
        }
        Ok(Self {
            n_modes,
            branches: vec![Branch {
                prob: 1.0,
                erased: 0,
                state,
            }],
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.prob).sum()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let total = self.total_probability();
        if (total - 1.0).abs() > crate::tensor::TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "branch probabilities sum to {total}"
            )));
        }
        for b in &self.branches {
            if b.prob < 0.0 {
                return Err(Error::InvalidState(format!(
                    "negative branch weight {}",
                    b.prob
                )));
            }
            let surviving = self.n_modes - b.erased.count_ones() as usize;
            if b.state.n_qubits() != Some(surviving) {
                return Err(Error::InvalidState(format!(
                    "branch state dim {} does not match {surviving} surviving modes",
                    b.state.dim()
                )));
            }
            b.state.check_invariants()?;
        }
        Ok(())
    }

    /// Collapses branches sharing an erasure pattern; output sorted by pattern.
    pub fn merged(&self) -> BranchEnsemble {
        let mut patterns: Vec<u32> = self.branches.iter().map(|b| b.erased).collect();
        patterns.sort_unstable();
        patterns.dedup();
        let branches = patterns
            .into_iter()
            .map(|pattern| {
                let group: Vec<&Branch> = self
                    .branches
                    .iter()
                    .filter(|b| b.erased == pattern)
                    .collect();
                let prob: f64 = group.iter().map(|b| b.prob).sum();
                let dim = group[0].state.dim();
                let mut acc = CMatrix::zeros(dim, dim);
                for b in &group {
                    acc += b.state.matrix() * C64::from(b.prob);
                }
                let state = if prob > 0.0 {
                    DensityMatrix::from_raw(acc / C64::from(prob))
                } else {
                    group[0].state.clone()
                };
                Branch {
                    prob,
                    erased: pattern,
                    state,
                }
            })
            .collect();
        BranchEnsemble {
            n_modes: self.n_modes,
            branches,
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            })
        } else {
            Ok(())
        }
    }

    /// Depolarizes `mode` with strength `lambda` on every branch where it
    /// survived. Erased branches pass through.
    pub fn depolarize(&self, lambda: f64, mode: usize) -> Result<BranchEnsemble> {
        check_unit("lambda", lambda)?;
        self.check_mode(mode)?;
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let state = match b.local_index(mode) {
                    Some(q) => {
                        let mixed = b.state.replace_qubit_with_mixed(q)?;
                        mixed.mix(lambda, &b.state)?
                    }
                    None => b.state.clone(),
                };
                Ok(Branch { state, ..*b })
            })
            .collect::<Result<_>>()?;
        Ok(BranchEnsemble {
            n_modes: self.n_modes,
            branches,
        })
    }

    /// Erases `mode` with probability `eps`: each branch where it survived
    /// splits into an intact branch of weight `1 − eps` and an erased branch
    /// of weight `eps` with the mode traced out. Zero-weight halves (at
    /// `eps = 0` or `eps = 1`) are not emitted.
    pub fn erase(&self, eps: f64, mode: usize) -> Result<BranchEnsemble> {
        check_unit("eps", eps)?;
        self.check_mode(mode)?;
        let mut branches = Vec::with_capacity(self.branches.len() * 2);
        for b in &self.branches {
            let Some(q) = b.local_index(mode) else {
                branches.push(b.clone());
                continue;
            };
            if eps < 1.0 {
                branches.push(Branch {
                    prob: b.prob * (1.0 - eps),
                    erased: b.erased,
                    state: b.state.clone(),
                });
            }
            if eps > 0.0 {
                branches.push(Branch {
                    prob: b.prob * eps,
                    erased: b.erased | 1 << mode,
                    state: b.state.trace_out_qubit(q)?,
                });
            }
        }
        Ok(BranchEnsemble {
            n_modes: self.n_modes,
            branches,
        })
    }

    /// Applies [`crosstalk_mixture`] to every branch. Fails if any branch has
    /// an erased mode.
    pub fn crosstalk(
        &self,
        eta: f64,
        block_a: Range<usize>,
        block_b: Range<usize>,
    ) -> Result<BranchEnsemble> {
        if self.branches.iter().any(|b| b.erased != 0) {
            return Err(Error::CrosstalkAfterErasure);
        }
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    state: crosstalk_mixture(&b.state, eta, block_a.clone(), block_b.clone())?,
                    ..*b
                })
            })
            .collect::<Result<_>>()?;
        Ok(BranchEnsemble {
            n_modes: self.n_modes,
            branches,
        })
    }
}

fn check_blocks(n_qubits: usize, a: &Range<usize>, b: &Range<usize>) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidBlocks("empty block".into()));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidBlocks(format!(
            "blocks {a:?} and {b:?} differ in size"
        )));
    }
    if a.start < b.end && b.start < a.end {
        return Err(Error::InvalidBlocks(format!(
            "blocks {a:?} and {b:?} overlap"
        )));
    }
    if a.end > n_qubits || b.end > n_qubits {
        return Err(Error::InvalidBlocks(format!(
            "blocks {a:?}, {b:?} exceed {n_qubits} modes"
        )));
    }
    Ok(())
}

/// Basis map of the unitary exchanging qubit blocks `a` and `b`.
pub fn block_swap_map(n_qubits: usize, a: Range<usize>, b: Range<usize>) -> Result<Vec<usize>> {
    check_blocks(n_qubits, &a, &b)?;
    let mut perm: Vec<usize> = (0..n_qubits).collect();
    for (i, j) in a.zip(b) {
        perm.swap(i, j);
    }
    Ok(qubit_permutation_map(&perm))
}

/// `(1 − η)ρ + η SρS†`, with `S` exchanging qubit blocks `block_a` and
/// `block_b`.
pub fn crosstalk_mixture(
    rho: &DensityMatrix,
    eta: f64,
    block_a: Range<usize>,
    block_b: Range<usize>,
) -> Result<DensityMatrix> {
    check_unit("eta", eta)?;
    let n = rho
        .n_qubits()
        .ok_or_else(|| Error::InvalidState(format!("dimension {} is not 2^n", rho.dim())))?;
    let map = block_swap_map(n, block_a, block_b)?;
    rho.permuted(&map).mix(eta, rho)
}

/// Two-qubit crosstalk through its unitary dilation: an environment control
/// qubit `√(1−η)|0⟩ + √η|1⟩` drives a controlled-SWAP, then is traced out.
pub fn crosstalk_dilation(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    check_unit("eta", eta)?;
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let control = CMatrix::from_fn(2, 2, |i, j| {
        let amp = [(1.0 - eta).sqrt(), eta.sqrt()];
        C64::from(amp[i] * amp[j])
    });
    let joint = control.kronecker(rho.matrix());

    // Fredkin: control is the most-significant qubit; swap |101⟩ and |110⟩.
    let mut fredkin = CMatrix::identity(8, 8);
    fredkin.swap_rows(5, 6);

    let evolved = DensityMatrix::from_raw(&fredkin * joint * fredkin.adjoint());
    evolved.partial_trace(&[1, 2], &[2, 2, 2])
}

/// One channel application in a pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    Crosstalk {
        eta: f64,
        block_a: Range<usize>,
        block_b: Range<usize>,
    },
    Erase {
        eps: f64,
        mode: usize,
    },
    Depolarize {
        lambda: f64,
        mode: usize,
    },
}

impl Stage {
    /// Independent erasure on each of `modes`.
    pub fn erase_each(eps: f64, modes: Range<usize>) -> impl Iterator<Item = Stage> {
        modes.map(move |mode| Stage::Erase { eps, mode })
    }

    /// Independent depolarizing noise on each of `modes`.
    pub fn depolarize_each(lambda: f64, modes: Range<usize>) -> impl Iterator<Item = Stage> {
        modes.map(move |mode| Stage::Depolarize { lambda, mode })
    }

    pub fn apply(&self, ens: &BranchEnsemble) -> Result<BranchEnsemble> {
        match self {
            Stage::Crosstalk {
                eta,
                block_a,
                block_b,
            } => ens.crosstalk(*eta, block_a.clone(), block_b.clone()),
            Stage::Erase { eps, mode } => ens.erase(*eps, *mode),
            Stage::Depolarize { lambda, mode } => ens.depolarize(*lambda, *mode),
        }
    }
}

/// Applies `stages` left to right.
pub fn apply_pipeline(ens: &BranchEnsemble, stages: &[Stage]) -> Result<BranchEnsemble> {
    stages
        .iter()
        .try_fold(ens.clone(), |acc, stage| stage.apply(&acc))
}

/// The 2×2 link: crosstalk between modes 0 and 1, then erasure and
/// depolarizing noise on each.
pub fn two_mode_link(p: &ChannelParams) -> Vec<Stage> {
    let mut stages = vec![Stage::Crosstalk {
        eta: p.eta,
        block_a: 0..1,
        block_b: 1..2,
    }];
    stages.extend(Stage::erase_each(p.eps, 0..2));
    stages.extend(Stage::depolarize_each(p.lambda, 0..2));
    stages
}
