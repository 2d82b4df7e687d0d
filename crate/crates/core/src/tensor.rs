//! Dense complex linear algebra for small multi-qubit registers.
//!
//! Subsystem 0 is always the most-significant tensor factor: for a register
//! of qubits `q0 q1 ... q(n-1)` the basis index is `q0·2^(n-1) + ... + q(n-1)`.
//! Everything here is dense; the largest register the exact engines build is
//! eight qubits ([`MAX_DIM`] = 256).

use std::fmt;
use std::sync::OnceLock;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Entrywise tolerance for algebraic identities (hermiticity, normalization).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance on traces and on the negative eigenvalue floor.
pub const TRACE_TOL: f64 = 1e-10;
/// Largest matrix dimension the exact engines will build.
pub const MAX_DIM: usize = 256;
/// Largest clone count for which the symmetric projector is built explicitly.
pub const MAX_SYM_QUBITS: usize = 8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A normalized pure state.
#[derive(Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Wraps `amps`, which must already have unit norm.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("empty amplitude vector".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm} differs from 1"
            )));
        }
        Ok(Self {
            amps: CVector::from_vec(amps),
        })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amps.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amps: CVector::from_iterator(amps.len(), amps.into_iter().map(|a| a / norm)),
        })
    }

    /// `α|0⟩ + β|1⟩`.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_raw(&self.amps * self.amps.adjoint())
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionOverflow { dim, max: MAX_DIM });
        }
        Ok(PureState {
            amps: self.amps.kronecker(&other.amps),
        })
    }
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

/// Draws a Haar-random pure state: independent standard complex Gaussian
/// amplitudes, normalized.
pub fn haar_state<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidState(format!(
            "Haar sampling needs dim >= 2, got {dim}"
        )));
    }
    loop {
        let amps: Vec<C64> = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im)
            })
            .collect();
        // Zero vector has probability zero; retry rather than fail.
        if let Ok(state) = PureState::normalized(amps) {
            return Ok(state);
        }
    }
}

/// `(α, β) ↦ (−β*, α*)`, the qubit state orthogonal to `psi`.
pub fn orthogonal_complement(psi: &PureState) -> Result<PureState> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: psi.dim(),
        });
    }
    let a = psi.amps[0];
    let b = psi.amps[1];
    Ok(PureState {
        amps: CVector::from_vec(vec![-b.conj(), a.conj()]),
    })
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
///
/// Constructors that accept arbitrary matrices validate; the internal
/// transformations used by the channel layer preserve the invariants by
/// construction and skip the eigen-decomposition.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = Self::from_raw(m);
        rho.check_invariants()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        Self { m }
    }

    /// The 1×1 state `[1]`, used for branches whose modes are all erased.
    pub fn scalar() -> Self {
        Self::from_raw(CMatrix::from_element(1, 1, ONE))
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_raw(CMatrix::identity(dim, dim) / C64::from(dim as f64))
    }

    /// `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        Ok(PureState::basis(dim, index)?.projector())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Number of qubits, when the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let m = &self.m;
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > ALGEBRAIC_TOL {
                    return Err(Error::InvalidState(format!("not Hermitian at ({i}, {j})")));
                }
            }
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    /// Eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.m + self.m.adjoint()) * C64::from(0.5);
        herm.symmetric_eigenvalues().iter().copied().collect()
    }

    /// `self ⊗ other`, with `self` on the most-significant index.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionOverflow { dim, max: MAX_DIM });
        }
        Ok(Self::from_raw(self.m.kronecker(&other.m)))
    }

    /// Traces out every subsystem not listed in `keep`.
    ///
    /// `dims` gives each subsystem's dimension, most-significant first. The
    /// kept subsystems appear in the output in increasing index order.
    pub fn partial_trace(&self, keep: &[usize], dims: &[usize]) -> Result<DensityMatrix> {
        let total: usize = dims.iter().product();
        if total != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: total,
            });
        }
        if keep.is_empty() {
            return Err(Error::InvalidState(
                "partial trace keeps no subsystem".into(),
            ));
        }
        let mut kept = vec![false; dims.len()];
        for &k in keep {
            if k >= dims.len() || kept[k] {
                return Err(Error::InvalidState(format!("invalid kept subsystem {k}")));
            }
            kept[k] = true;
        }

        let out_dim: usize = dims
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(d, _)| d)
            .product();
        let split = |mut index: usize| -> (usize, usize) {
            // Returns (index within kept factors, index within traced factors).
            let (mut k_idx, mut k_stride) = (0, 1);
            let (mut t_idx, mut t_stride) = (0, 1);
            for (s, &d) in dims.iter().enumerate().rev() {
                let digit = index % d;
                index /= d;
                if kept[s] {
                    k_idx += digit * k_stride;
                    k_stride *= d;
                } else {
                    t_idx += digit * t_stride;
                    t_stride *= d;
                }
            }
            (k_idx, t_idx)
        };
        let parts: Vec<(usize, usize)> = (0..total).map(split).collect();

        let mut out = CMatrix::zeros(out_dim, out_dim);
        for (i, &(ki, ti)) in parts.iter().enumerate() {
            for (j, &(kj, tj)) in parts.iter().enumerate() {
                if ti == tj {
                    out[(ki, kj)] += self.m[(i, j)];
                }
            }
        }
        Ok(Self::from_raw(out))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let v = psi.amps.dotc(&(&self.m * &psi.amps));
        debug_assert!(v.im.abs() < 1e-9);
        Ok(v.re.clamp(0.0, 1.0))
    }

    /// `p·self + (1 − p)·other`.
    pub fn mix(&self, p: f64, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self::from_raw(
            &self.m * C64::from(p) + &other.m * C64::from(1.0 - p),
        ))
    }

    /// `S ρ S†` for the basis permutation `S|b⟩ = |map[b]⟩`.
    pub fn permuted(&self, map: &[usize]) -> DensityMatrix {
        let n = self.dim();
        debug_assert_eq!(map.len(), n);
        let mut out = CMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                out[(map[i], map[j])] = self.m[(i, j)];
            }
        }
        Self::from_raw(out)
    }

    /// Traces out qubit `q` of an `n`-qubit register.
    pub fn trace_out_qubit(&self, q: usize) -> Result<DensityMatrix> {
        let n = self.qubit_count()?;
        if q >= n {
            return Err(Error::ModeOutOfRange {
                mode: q,
                n_modes: n,
            });
        }
        if n == 1 {
            return Ok(Self::from_raw(CMatrix::from_element(1, 1, self.trace())));
        }
        let bit = 1usize << (n - 1 - q);
        let low = bit - 1;
        let half = self.dim() / 2;
        // Reduced index r -> full index with a 0 inserted at position `bit`.
        let expand = |r: usize| ((r & !low) << 1) | (r & low);
        let out = CMatrix::from_fn(half, half, |r, c| {
            let (i, j) = (expand(r), expand(c));
            self.m[(i, j)] + self.m[(i | bit, j | bit)]
        });
        Ok(Self::from_raw(out))
    }

    /// Replaces qubit `q` by `I/2`, keeping the marginal on the other qubits.
    pub fn replace_qubit_with_mixed(&self, q: usize) -> Result<DensityMatrix> {
        let n = self.qubit_count()?;
        if q >= n {
            return Err(Error::ModeOutOfRange {
                mode: q,
                n_modes: n,
            });
        }
        let bit = 1usize << (n - 1 - q);
        let out = CMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if (i & bit) != (j & bit) {
                return ZERO;
            }
            let (i0, j0) = (i & !bit, j & !bit);
            (self.m[(i0, j0)] + self.m[(i0 | bit, j0 | bit)]) * 0.5
        });
        Ok(Self::from_raw(out))
    }

    /// Single-qubit marginal of qubit `q`.
    pub fn qubit_marginal(&self, q: usize) -> Result<DensityMatrix> {
        let n = self.qubit_count()?;
        if q >= n {
            return Err(Error::ModeOutOfRange {
                mode: q,
                n_modes: n,
            });
        }
        self.partial_trace(&[q], &vec![2; n])
    }

    fn qubit_count(&self) -> Result<usize> {
        self.n_qubits()
            .ok_or_else(|| Error::InvalidState(format!("dimension {} is not 2^n", self.dim())))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.m - &other.m)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Trace distance `½‖self − other‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.m - &other.m;
        let herm = (&diff + diff.adjoint()) * C64::from(0.5);
        Ok(0.5
            * herm
                .symmetric_eigenvalues()
                .iter()
                .map(|e| e.abs())
                .sum::<f64>())
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix({}x{}) {}", self.dim(), self.dim(), self.m)
    }
}

/// Basis map of the qubit permutation that sends the content of qubit `k` to
/// position `perm[k]`.
pub fn qubit_permutation_map(perm: &[usize]) -> Vec<usize> {
    let n = perm.len();
    (0..1usize << n)
        .map(|b| {
            let mut out = 0;
            for (k, &target) in perm.iter().enumerate() {
                if b >> (n - 1 - k) & 1 == 1 {
                    out |= 1 << (n - 1 - target);
                }
            }
            out
        })
        .collect()
}

/// Unitary matrix of a qubit permutation (see [`qubit_permutation_map`]).
pub fn qubit_permutation_operator(perm: &[usize]) -> CMatrix {
    let map = qubit_permutation_map(perm);
    let mut s = CMatrix::zeros(map.len(), map.len());
    for (b, &image) in map.iter().enumerate() {
        s[(image, b)] = ONE;
    }
    s
}

/// Projector onto the symmetric subspace of `n` qubits, built as the average
/// of all `n!` qubit-permutation operators. Built once per `n` and cached.
pub fn sym_projector(n: usize) -> Result<CMatrix> {
    static CACHE: [OnceLock<CMatrix>; MAX_SYM_QUBITS] = [const { OnceLock::new() }; MAX_SYM_QUBITS];
    if n == 0 || n > MAX_SYM_QUBITS {
        return build_sym_projector(n);
    }
    Ok(CACHE[n - 1]
        .get_or_init(|| build_sym_projector(n).expect("n within cap"))
        .clone())
}

fn build_sym_projector(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidState(
            "symmetric projector needs n >= 1".into(),
        ));
    }
    if n > MAX_SYM_QUBITS {
        return Err(Error::CapacityExceeded {
            what: "clone count",
            value: n,
            cap: MAX_SYM_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    let mut count = 0usize;
    for perm in (0..n).permutations(n) {
        for (b, image) in qubit_permutation_map(&perm).into_iter().enumerate() {
            acc[(image, b)] += 1.0;
        }
        count += 1;
    }
    let scale = 1.0 / count as f64;
    Ok(acc.map(|v| C64::new(v * scale, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_density(n_qubits: usize, rng: &mut Rng) -> DensityMatrix {
        // Mixture of a few Haar projectors.
        let dim = 1 << n_qubits;
        let mut acc = CMatrix::zeros(dim, dim);
        let weights = [0.5, 0.3, 0.2];
        for w in weights {
            acc += haar_state(dim, rng).unwrap().projector().into_matrix() * C64::from(w);
        }
        DensityMatrix::new(acc).unwrap()
    }

    #[test]
    fn tensor_basis_states() {
        let zero = DensityMatrix::basis(2, 0).unwrap();
        let one = DensityMatrix::basis(2, 1).unwrap();
        let prod = zero.tensor(&one).unwrap();
        assert_eq!(prod, DensityMatrix::basis(4, 1).unwrap());
    }

    #[test]
    fn tensor_of_mixed_states_is_mixed() {
        let pi = DensityMatrix::maximally_mixed(2);
        let prod = pi.tensor(&pi).unwrap();
        assert!(prod.max_abs_diff(&DensityMatrix::maximally_mixed(4)) < ALGEBRAIC_TOL);
    }

    #[test]
    fn tensor_overflow() {
        let big = DensityMatrix::maximally_mixed(128);
        let err = big.tensor(&DensityMatrix::maximally_mixed(4)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionOverflow {
                dim: 512,
                max: MAX_DIM
            }
        );
    }

    #[test]
    fn partial_trace_examples() {
        let rho = DensityMatrix::basis(4, 1).unwrap();
        let r = rho.partial_trace(&[0], &[2, 2]).unwrap();
        assert_eq!(r, DensityMatrix::basis(2, 0).unwrap());
        let r = rho.partial_trace(&[1], &[2, 2]).unwrap();
        assert_eq!(r, DensityMatrix::basis(2, 1).unwrap());

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
        let marginal = bell.projector().partial_trace(&[0], &[2, 2]).unwrap();
        assert!(marginal.max_abs_diff(&DensityMatrix::maximally_mixed(2)) < ALGEBRAIC_TOL);
    }

    #[test]
    fn partial_trace_mixed_radix() {
        let mut rng = Rng::new(3, 0);
        let a = random_density(1, &mut rng);
        let b = DensityMatrix::maximally_mixed(3);
        let prod = a.tensor(&b).unwrap();
        let back = prod.partial_trace(&[0], &[2, 3]).unwrap();
        assert!(back.max_abs_diff(&a) < ALGEBRAIC_TOL);
        let back = prod.partial_trace(&[1], &[2, 3]).unwrap();
        assert!(back.max_abs_diff(&b) < ALGEBRAIC_TOL);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            rho.partial_trace(&[0], &[2, 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(rho.partial_trace(&[], &[2, 2]).is_err());
        assert!(rho.partial_trace(&[2], &[2, 2]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let zero = PureState::basis(2, 0).unwrap();
        let one = PureState::basis(2, 1).unwrap();
        assert_eq!(zero.projector().fidelity(&zero).unwrap(), 1.0);
        assert_eq!(zero.projector().fidelity(&one).unwrap(), 0.0);
        let f = DensityMatrix::maximally_mixed(2).fidelity(&zero).unwrap();
        assert!((f - 0.5).abs() < ALGEBRAIC_TOL);
        assert!(DensityMatrix::maximally_mixed(4).fidelity(&zero).is_err());
    }

    #[test]
    fn orthogonal_complement_examples() {
        let zero = PureState::basis(2, 0).unwrap();
        let perp = orthogonal_complement(&zero).unwrap();
        assert!((perp.inner(&PureState::basis(2, 1).unwrap()).unwrap().norm() - 1.0).abs() < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::qubit(c(s, 0.0), c(s, 0.0)).unwrap();
        let perp = orthogonal_complement(&plus).unwrap();
        assert!(plus.inner(&perp).unwrap().norm() < ALGEBRAIC_TOL);

        // (0.6, 0.8i) -> (-(0.8i)*, 0.6*) = (0.8i, 0.6)
        let psi = PureState::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let perp = orthogonal_complement(&psi).unwrap();
        assert_eq!(perp.amplitudes(), &[c(-0.0, 0.8), c(0.6, -0.0)]);
        assert!(psi.inner(&perp).unwrap().norm() < ALGEBRAIC_TOL);

        assert!(orthogonal_complement(&PureState::basis(4, 0).unwrap()).is_err());
    }

    #[test]
    fn haar_is_normalized_and_reproducible() {
        let a = haar_state(8, &mut Rng::new(7, 2)).unwrap();
        let b = haar_state(8, &mut Rng::new(7, 2)).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < ALGEBRAIC_TOL);
        assert_ne!(a, haar_state(8, &mut Rng::new(7, 3)).unwrap());
        assert!(haar_state(1, &mut Rng::new(7, 2)).is_err());
    }

    #[test]
    fn haar_first_moment_is_maximally_mixed() {
        let mut rng = Rng::new(11, 0);
        let n = 10_000;
        let mut acc = CMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += haar_state(2, &mut rng).unwrap().projector().into_matrix();
        }
        let mean = DensityMatrix::from_raw(acc / C64::from(n as f64));
        let d = mean
            .trace_distance(&DensityMatrix::maximally_mixed(2))
            .unwrap();
        assert!(d < 0.02, "trace distance {d}");
    }

    #[test]
    fn haar_overlap_has_mean_one_half() {
        // |⟨ψ0|ψ⟩|² is uniform on [0, 1] for qubits: mean 1/2, variance 1/12.
        let mut rng = Rng::new(5, 1);
        let psi0 = haar_state(2, &mut rng).unwrap();
        let n = 20_000;
        let mean = (0..n)
            .map(|_| {
                psi0.inner(&haar_state(2, &mut rng).unwrap())
                    .unwrap()
                    .norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        let sigma = (1.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn sym_projector_small_cases() {
        let p1 = sym_projector(1).unwrap();
        assert_eq!(p1, CMatrix::identity(2, 2));

        let p2 = sym_projector(2).unwrap();
        assert!((p2.trace().re - 3.0).abs() < ALGEBRAIC_TOL);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = CVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
        assert!((&p2 * singlet).norm() < ALGEBRAIC_TOL);

        let p3 = sym_projector(3).unwrap();
        assert!((p3.trace().re - 4.0).abs() < ALGEBRAIC_TOL);
        let diff = &p3 * &p3 - &p3;
        assert!(diff.iter().all(|z| z.norm() < ALGEBRAIC_TOL));
    }

    #[test]
    fn sym_projector_trace_and_cap() {
        for n in 1..=MAX_SYM_QUBITS {
            let p = sym_projector(n).unwrap();
            assert!((p.trace().re - (n + 1) as f64).abs() < 1e-9, "n = {n}");
        }
        assert!(matches!(
            sym_projector(MAX_SYM_QUBITS + 1),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn sym_projector_commutes_with_permutations() {
        for n in 1..=4 {
            let p = sym_projector(n).unwrap();
            for perm in (0..n).permutations(n) {
                let s = qubit_permutation_operator(&perm);
                let comm = &s * &p - &p * &s;
                assert!(comm.iter().all(|z| z.norm() < ALGEBRAIC_TOL), "{perm:?}");
            }
        }
    }

    #[test]
    fn qubit_helpers_match_partial_trace() {
        let mut rng = Rng::new(21, 0);
        let rho = random_density(3, &mut rng);
        for q in 0..3 {
            let keep: Vec<usize> = (0..3).filter(|&k| k != q).collect();
            let expected = rho.partial_trace(&keep, &[2, 2, 2]).unwrap();
            assert!(rho.trace_out_qubit(q).unwrap().max_abs_diff(&expected) < ALGEBRAIC_TOL);

            // Replacing q by π equals inserting π into the reduced state at q.
            let pi = DensityMatrix::maximally_mixed(2);
            let replaced = rho.replace_qubit_with_mixed(q).unwrap();
            let rebuilt = match q {
                0 => pi.tensor(&expected).unwrap(),
                2 => expected.tensor(&pi).unwrap(),
                _ => {
                    // π in the middle: tensor then move qubit 0 to position 1.
                    let t = pi.tensor(&expected).unwrap();
                    t.permuted(&qubit_permutation_map(&[1, 0, 2]))
                }
            };
            assert!(replaced.max_abs_diff(&rebuilt) < ALGEBRAIC_TOL, "q = {q}");
        }
    }

    #[test]
    fn invariant_checks_reject_bad_matrices() {
        let mut m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let mut m = CMatrix::identity(2, 2) * C64::from(0.5);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    mod props {
        use super::*;
        use crate::rng::Rng;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn tensor_then_trace_roundtrips(seed in any::<u64>(), na in 1usize..3, nb in 1usize..3) {
                let mut rng = Rng::new(seed, 0);
                let a = random_density(na, &mut rng);
                let b = random_density(nb, &mut rng);
                let ab = a.tensor(&b).unwrap();
                prop_assert!(ab.check_invariants().is_ok());
                prop_assert!((ab.trace().re - 1.0).abs() < TRACE_TOL);
                let back = ab.partial_trace(&[0], &[1 << na, 1 << nb]).unwrap();
                prop_assert!(back.max_abs_diff(&a) < ALGEBRAIC_TOL);
                prop_assert!(back.check_invariants().is_ok());
            }

            #[test]
            fn fidelity_is_linear(seed in any::<u64>(), p in 0.0f64..=1.0) {
                let mut rng = Rng::new(seed, 1);
                let r1 = random_density(2, &mut rng);
                let r2 = random_density(2, &mut rng);
                let psi = haar_state(4, &mut rng).unwrap();
                let lhs = r1.mix(p, &r2).unwrap().fidelity(&psi).unwrap();
                let rhs = p * r1.fidelity(&psi).unwrap() + (1.0 - p) * r2.fidelity(&psi).unwrap();
                prop_assert!((lhs - rhs).abs() < ALGEBRAIC_TOL);
            }

            #[test]
            fn qubit_maps_preserve_invariants(seed in any::<u64>(), q in 0usize..3) {
                let mut rng = Rng::new(seed, 2);
                let rho = random_density(3, &mut rng);
                prop_assert!(rho.replace_qubit_with_mixed(q).unwrap().check_invariants().is_ok());
                prop_assert!(rho.trace_out_qubit(q).unwrap().check_invariants().is_ok());
                prop_assert!(rho.qubit_marginal(q).unwrap().check_invariants().is_ok());
            }
        }
    }
}
