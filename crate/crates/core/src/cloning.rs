//! Symmetric universal cloning of a qubit.
//!
//! The 1→M output is the optimal symmetric cloner state
//! `c · P_sym (|ψ⟩⟨ψ| ⊗ I^{⊗(M−1)}) P_sym`, normalized to unit trace. Only the
//! clone register is modeled; cloner ancillas never reach the channel.

use crate::error::{Error, Result};
use crate::tensor::{
    orthogonal_complement, sym_projector, CMatrix, DensityMatrix, PureState, C64, MAX_SYM_QUBITS,
};

/// `M` clones of one source qubit, held as a joint state.
#[derive(Clone, Debug)]
pub struct CloneBatch {
    joint: DensityMatrix,
    copies: usize,
    source: PureState,
}

impl CloneBatch {
    pub fn joint(&self) -> &DensityMatrix {
        &self.joint
    }

    pub fn into_joint(self) -> DensityMatrix {
        self.joint
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn source(&self) -> &PureState {
        &self.source
    }

    /// Reduced state of clone `k`.
    pub fn marginal(&self, k: usize) -> Result<DensityMatrix> {
        self.joint.qubit_marginal(k)
    }

    /// Fidelity of clone `k` with the source.
    pub fn marginal_fidelity(&self, k: usize) -> Result<f64> {
        self.marginal(k)?.fidelity(&self.source)
    }
}

fn require_qubit(psi: &PureState) -> Result<()> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: psi.dim(),
        });
    }
    Ok(())
}

/// The explicit two-clone state
/// `⅔|ψψ⟩⟨ψψ| + ⅙(|ψψ⊥⟩ + |ψ⊥ψ⟩)(⟨ψψ⊥| + ⟨ψ⊥ψ|)`.
pub fn clone_1to2(psi: &PureState) -> Result<CloneBatch> {
    require_qubit(psi)?;
    let perp = orthogonal_complement(psi)?;
    let pp = psi.tensor(psi)?;
    let mixed: Vec<C64> = psi
        .tensor(&perp)?
        .amplitudes()
        .iter()
        .zip(perp.tensor(psi)?.amplitudes())
        .map(|(a, b)| a + b)
        .collect();
    let mixed = crate::tensor::CVector::from_vec(mixed);
    let pp = crate::tensor::CVector::from_column_slice(pp.amplitudes());
    let joint =
        &pp * pp.adjoint() * C64::from(2.0 / 3.0) + &mixed * mixed.adjoint() * C64::from(1.0 / 6.0);
    Ok(CloneBatch {
        joint: DensityMatrix::from_raw(joint),
        copies: 2,
        source: psi.clone(),
    })
}

/// Optimal symmetric 1→M cloner output, built by symmetric projection.
pub fn clone_1to_m(psi: &PureState, copies: usize) -> Result<CloneBatch> {
    require_qubit(psi)?;
    if copies == 0 {
        return Err(Error::InvalidConfig(
            "clone count must be at least 1".into(),
        ));
    }
    if copies > MAX_SYM_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "clone count",
            value: copies,
            cap: MAX_SYM_QUBITS,
        });
    }
    let rest = 1usize << (copies - 1);
    let seeded: CMatrix = psi
        .projector()
        .matrix()
        .kronecker(&CMatrix::identity(rest, rest));
    let proj = sym_projector(copies)?;
    let unnormalized = &proj * seeded * &proj;
    let trace = unnormalized.trace();
    Ok(CloneBatch {
        joint: DensityMatrix::from_raw(unnormalized / trace),
        copies,
        source: psi.clone(),
    })
}

/// Per-clone fidelity of the optimal symmetric 1→M qubit cloner,
/// `(2M + 1) / (3M)`.
pub fn clone_fidelity_law(copies: u64) -> f64 {
    assert!(copies >= 1, "clone count must be at least 1");
    let m = copies as f64;
    (2.0 * m + 1.0) / (3.0 * m)
}
