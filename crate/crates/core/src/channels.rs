//! Quantum channels in Kraus, Choi and Stinespring form.
//!
//! The Choi state is the trace-one operator `(1 ⊗ E)(|φ+><φ+|)` with
//! `|φ+> = Σ_i |ii> / sqrt(d)`: the input reference system `A` comes first and
//! the channel acts on the second factor. Kraus sets are not unique, so channel
//! equality is always judged on Choi states.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, ONE, ZERO};
use crate::states::{trace_distance_matrices, DensityMatrix, HilbertSpec};
#[allow(unused_imports)]
use num_traits::Float;

/// Completeness tolerance for Kraus sets.
pub const KRAUS_TOL: f64 = 1e-9;
/// Eigenvalues of a Choi matrix below this are dropped when extracting Kraus operators.
pub const KRAUS_RANK_TOL: f64 = 1e-10;
/// Tolerance on the input marginal of a Choi state.
pub const CHOI_MARGINAL_TOL: f64 = 1e-9;

/// A CPTP map `ρ ↦ Σ_i K_i ρ K_i^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d_in: usize,
    d_out: usize,
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    /// Validates shapes and `Σ K_i^dag K_i = I`.
    pub fn new(d_in: usize, d_out: usize, ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::EmptyKraus);
        }
        if d_in < 2 || d_out < 2 {
            return Err(Error::InvalidDimensions("channel dimensions must be at least 2"));
        }
        for k in &ops {
            if k.nrows() != d_out {
                return Err(Error::DimensionMismatch { expected: d_out, found: k.nrows() });
            }
            if k.ncols() != d_in {
                return Err(Error::DimensionMismatch { expected: d_in, found: k.ncols() });
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in &ops {
            sum += k.adjoint() * k;
        }
        let deviation = linalg::max_abs(&(sum - linalg::identity(d_in)));
        if deviation > KRAUS_TOL {
            return Err(Error::IncompleteKraus { deviation });
        }
        Ok(Self { d_in, d_out, ops })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(d, d, vec![linalg::identity(d)])
    }

    /// Conjugation by a unitary.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: u.ncols() });
        }
        let deviation = linalg::max_abs(&(&u * u.adjoint() - linalg::identity(n)));
        if deviation > KRAUS_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Self::new(n, n, vec![u])
    }

    /// `ρ ↦ (1 - r) ρ + r tr(ρ) I/d`, written with the Weyl (clock and shift) basis so that
    /// the qubit case uses the Pauli operators.
    pub fn depolarizing(d: usize, r: f64) -> Result<Self> {
        check_unit("r", r)?;
        let omega = 2.0 * core::f64::consts::PI / d as f64;
        let mut ops = Vec::with_capacity(d * d);
        let dd = (d * d) as f64;
        for a in 0..d {
            for b in 0..d {
                let weight = if a == 0 && b == 0 { 1.0 - r + r / dd } else { r / dd };
                if weight == 0.0 {
                    continue;
                }
                let w = weight.sqrt();
                // X^a Z^b |x> = ω^{bx} |x + a>
                ops.push(CMatrix::from_fn(d, d, |row, x| {
                    if row == (x + a) % d {
                        Complex64::from_polar(w, omega * (b * x) as f64)
                    } else {
                        ZERO
                    }
                }));
            }
        }
        Self::new(d, d, ops)
    }

    /// Qubit channel `ρ ↦ (1 - p) ρ + p/2 (X ρ X + Z ρ Z)`.
    pub fn xz_flip(p: f64) -> Result<Self> {
        check_unit("p", p)?;
        let weighted = [(1.0 - p, pauli_i()), (p / 2.0, pauli_x()), (p / 2.0, pauli_z())];
        let ops = weighted.into_iter().filter(|(w, _)| *w > 0.0).map(|(w, m)| m.scale(w.sqrt())).collect();
        Self::new(2, 2, ops)
    }

    /// [`KrausChannel::xz_flip`] followed by mixing with the fully depolarizing channel:
    /// `ρ ↦ (1 - r) E_p(ρ) + r I/2`.
    pub fn xz_flip_depolarized(p: f64, r: f64) -> Result<Self> {
        check_unit("r", r)?;
        Self::xz_flip(p)?.mix(&Self::depolarizing(2, 1.0)?, r)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit("gamma", gamma)?;
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - gamma).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(gamma.sqrt(), 0.0), ZERO, ZERO]);
        let ops = if gamma == 0.0 { vec![k0] } else { vec![k0, k1] };
        Self::new(2, 2, ops)
    }

    /// Apply to a density matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: rho.dim() });
        }
        let out = self.apply_matrix(rho.matrix());
        DensityMatrix::new(HilbertSpec::single(self.d_out)?, out)
    }

    pub(crate) fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        linalg::hermitize(&out)
    }

    /// Apply to the pure state with the given amplitudes.
    pub(crate) fn apply_pure(&self, amps: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.ops {
            let v: Vec<Complex64> = (0..self.d_out).map(|a| (0..self.d_in).map(|x| k[(a, x)] * amps[x]).sum()).collect();
            for i in 0..self.d_out {
                for j in 0..self.d_out {
                    out[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        out
    }

    /// Choi state `(1 ⊗ E)(|φ+><φ+|)`.
    pub fn to_choi(&self) -> ChoiState {
        let (d_a, d_b) = (self.d_in, self.d_out);
        let n = d_a * d_b;
        let mut m = CMatrix::zeros(n, n);
        let norm = 1.0 / d_a as f64;
        for k in &self.ops {
            // |v> = Σ_i |i> ⊗ K|i>
            let v: Vec<Complex64> = (0..n).map(|idx| k[(idx % d_b, idx / d_b)]).collect();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += v[i] * v[j].conj() * norm;
                }
            }
        }
        let space = HilbertSpec::bipartite(d_a, d_b).expect("validated dimensions");
        ChoiState {
            state: DensityMatrix::from_parts_unchecked(space, linalg::hermitize(&m)),
            d_a,
            d_b,
        }
    }

    /// Convex combination `(1 - w) self + w other`.
    pub fn mix(&self, other: &KrausChannel, w: f64) -> Result<Self> {
        check_unit("w", w)?;
        if self.d_in != other.d_in || self.d_out != other.d_out {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: other.d_in });
        }
        let mut ops = Vec::with_capacity(self.ops.len() + other.ops.len());
        if w < 1.0 {
            ops.extend(self.ops.iter().map(|k| k.scale((1.0 - w).sqrt())));
        }
        if w > 0.0 {
            ops.extend(other.ops.iter().map(|k| k.scale(w.sqrt())));
        }
        Self::new(self.d_in, self.d_out, ops)
    }

    /// `after ∘ self`: apply `self` first.
    pub fn then(&self, after: &KrausChannel) -> Result<Self> {
        if self.d_out != after.d_in {
            return Err(Error::DimensionMismatch { expected: after.d_in, found: self.d_out });
        }
        let ops = after.ops.iter().flat_map(|b| self.ops.iter().map(move |a| b * a)).collect();
        Self::new(self.d_in, after.d_out, ops)
    }

    /// Stinespring dilation with the ancilla prepared in its first basis state.
    pub fn stinespring(&self) -> Result<StinespringDilation> {
        if self.d_in != self.d_out {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: self.d_out });
        }
        let d = self.d_in;
        let n_anc = self.ops.len();
        let big = d * n_anc;
        // columns (x, 0) carry the isometry V|x> = Σ_i K_i|x> ⊗ |i>
        let isometry: Vec<Vec<Complex64>> = (0..d)
            .map(|x| {
                let mut col = vec![ZERO; big];
                for (i, k) in self.ops.iter().enumerate() {
                    for a in 0..d {
                        col[a * n_anc + i] = k[(a, x)];
                    }
                }
                col
            })
            .collect();
        let completed = linalg::complete_orthonormal(&isometry, big);
        let mut unitary = CMatrix::zeros(big, big);
        let mut spare = completed[d..].iter();
        for x in 0..d {
            for a in 0..n_anc {
                let col = if a == 0 { &completed[x] } else { spare.next().expect("completion has full rank") };
                for r in 0..big {
                    unitary[(r, x * n_anc + a)] = col[r];
                }
            }
        }
        StinespringDilation::new(d, n_anc, unitary)
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter { name, value });
    }
    Ok(())
}

pub fn pauli_i() -> CMatrix {
    linalg::identity(2)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
}

/// Choi state of a channel from `d_a`-dimensional to `d_b`-dimensional systems.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState {
    state: DensityMatrix,
    d_a: usize,
    d_b: usize,
}

impl ChoiState {
    /// Validates positivity, unit trace and `tr_B χ = I/d_a`.
    pub fn new(matrix: CMatrix, d_a: usize, d_b: usize) -> Result<Self> {
        let state = DensityMatrix::new(HilbertSpec::bipartite(d_a, d_b)?, matrix)?;
        Self::from_state(state)
    }

    pub fn from_state(state: DensityMatrix) -> Result<Self> {
        let [d_a, d_b] = state.space().dims() else {
            return Err(Error::NotBipartite);
        };
        let (d_a, d_b) = (*d_a, *d_b);
        let deviation = input_marginal_deviation(state.matrix(), d_a, d_b);
        if deviation > CHOI_MARGINAL_TOL {
            return Err(Error::ChoiMarginal { deviation });
        }
        Ok(Self { state, d_a, d_b })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn matrix(&self) -> &CMatrix {
        self.state.matrix()
    }

    /// Kraus operators from the scaled eigenvectors of the Choi matrix.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let (values, vectors) = linalg::eigh(self.matrix());
        if let Some(&min) = values.first() {
            if min < -crate::states::PSD_TOL {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
        }
        let (d_a, d_b) = (self.d_a, self.d_b);
        let mut ops = Vec::new();
        // largest eigenvalues first
        for (col, &lambda) in values.iter().enumerate().rev() {
            if lambda < KRAUS_RANK_TOL {
                continue;
            }
            let w = (d_a as f64 * lambda).sqrt();
            ops.push(CMatrix::from_fn(d_b, d_a, |b, a| vectors[(a * d_b + b, col)] * w));
        }
        KrausChannel::new(d_a, d_b, ops)
    }

    /// `E(ρ) = d_a tr_A[χ (ρ^T ⊗ I)]`, transpose in the computational basis.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_a {
            return Err(Error::DimensionMismatch { expected: self.d_a, found: rho.dim() });
        }
        let (d_a, d_b) = (self.d_a, self.d_b);
        let chi = self.matrix();
        let r = rho.matrix();
        let out = CMatrix::from_fn(d_b, d_b, |a, b| {
            let mut acc = ZERO;
            for i in 0..d_a {
                for j in 0..d_a {
                    acc += chi[(i * d_b + a, j * d_b + b)] * r[(i, j)];
                }
            }
            acc * d_a as f64
        });
        DensityMatrix::new(HilbertSpec::single(d_b)?, linalg::hermitize(&out))
    }

    /// Trace distance between two Choi states.
    pub fn distance(&self, other: &ChoiState) -> Result<f64> {
        if self.state.space() != other.state.space() {
            return Err(Error::DimensionMismatch { expected: self.state.dim(), found: other.state.dim() });
        }
        Ok(trace_distance_matrices(self.matrix(), other.matrix()))
    }
}

pub(crate) fn input_marginal_deviation(m: &CMatrix, d_a: usize, d_b: usize) -> f64 {
    let marginal = linalg::partial_trace_raw(m, &[d_a, d_b], &[0]);
    linalg::max_abs(&(marginal - linalg::identity(d_a).unscale(d_a as f64)))
}

/// Unitary `U` on system ⊗ ancilla with `E(ρ) = tr_anc U (ρ ⊗ |0><0|) U^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringDilation {
    d: usize,
    d_anc: usize,
    unitary: CMatrix,
}

impl StinespringDilation {
    pub fn new(d: usize, d_anc: usize, unitary: CMatrix) -> Result<Self> {
        let n = d * d_anc;
        if unitary.nrows() != n || unitary.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: unitary.nrows() });
        }
        let deviation = linalg::max_abs(&(&unitary * unitary.adjoint() - linalg::identity(n)));
        if deviation > KRAUS_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { d, d_anc, unitary })
    }

    pub fn system_dim(&self) -> usize {
        self.d
    }

    pub fn ancilla_dim(&self) -> usize {
        self.d_anc
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Kraus operators `K_i = (I ⊗ <i|) U (I ⊗ |0>)`.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let (d, n) = (self.d, self.d_anc);
        let ops = (0..n).map(|i| CMatrix::from_fn(d, d, |a, x| self.unitary[(a * n + i, x * n)])).collect();
        KrausChannel::new(d, d, ops)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: rho.dim() });
        }
        let mut anc = CMatrix::zeros(self.d_anc, self.d_anc);
        anc[(0, 0)] = ONE;
        let joint = &self.unitary * linalg::kron(rho.matrix(), &anc) * self.unitary.adjoint();
        let out = linalg::partial_trace_raw(&joint, &[self.d, self.d_anc], &[0]);
        DensityMatrix::new(HilbertSpec::single(self.d)?, linalg::hermitize(&out))
    }
}

/// Named channel families.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Identity { dim: usize },
    Unitary(CMatrix),
    Depolarizing { dim: usize, r: f64 },
    /// Qubit `(1 - p) ρ + p/2 (X ρ X + Z ρ Z)`.
    XzFlip { p: f64 },
    /// `(1 - r) XzFlip(p) + r I/2`.
    XzFlipDepolarized { p: f64, r: f64 },
    AmplitudeDamping { gamma: f64 },
}

impl Builtin {
    pub fn build(&self) -> Result<KrausChannel> {
        match self {
            Builtin::Identity { dim } => KrausChannel::identity(*dim),
            Builtin::Unitary(u) => KrausChannel::unitary(u.clone()),
            Builtin::Depolarizing { dim, r } => KrausChannel::depolarizing(*dim, *r),
            Builtin::XzFlip { p } => KrausChannel::xz_flip(*p),
            Builtin::XzFlipDepolarized { p, r } => KrausChannel::xz_flip_depolarized(*p, *r),
            Builtin::AmplitudeDamping { gamma } => KrausChannel::amplitude_damping(*gamma),
        }
    }

    /// Stable identifier used in reports.
    pub fn label(&self) -> alloc::string::String {
        match self {
            Builtin::Identity { dim } => format!("identity(d={dim})"),
            Builtin::Unitary(u) => format!("unitary(d={})", u.nrows()),
            Builtin::Depolarizing { dim, r } => format!("depolarizing(d={dim}, r={r})"),
            Builtin::XzFlip { p } => format!("xz_flip(p={p})"),
            Builtin::XzFlipDepolarized { p, r } => format!("xz_flip_depolarized(p={p}, r={r})"),
            Builtin::AmplitudeDamping { gamma } => format!("amplitude_damping(gamma={gamma})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::PureState;

    fn qubit() -> HilbertSpec {
        HilbertSpec::single(2).unwrap()
    }

    /// Bell basis ordered (φ+, ψ+, φ-, ψ-).
    fn bell(index: usize) -> DensityMatrix {
        let s = 1.0 / 2.0f64.sqrt();
        let amps = match index {
            0 => [s, 0.0, 0.0, s],
            1 => [0.0, s, s, 0.0],
            2 => [s, 0.0, 0.0, -s],
            _ => [0.0, s, -s, 0.0],
        };
        PureState::new(HilbertSpec::bipartite(2, 2).unwrap(), amps.iter().map(|&a| c(a, 0.0)).collect())
            .unwrap()
            .density()
    }

    fn bell_weight(choi: &ChoiState, index: usize) -> f64 {
        (bell(index).matrix() * choi.matrix()).trace().re
    }

    #[test]
    fn rejects_incomplete_kraus() {
        let k = linalg::identity(2).scale(0.5);
        assert!(matches!(KrausChannel::new(2, 2, vec![k]), Err(Error::IncompleteKraus { .. })));
        assert_eq!(KrausChannel::new(2, 2, vec![]), Err(Error::EmptyKraus));
        assert!(matches!(KrausChannel::xz_flip(1.5), Err(Error::InvalidParameter { name: "p", .. })));
        assert!(KrausChannel::unitary(linalg::identity(2).scale(2.0)).is_err());
    }

    #[test]
    fn identity_and_full_depolarizer() {
        let rho = PureState::bloch(0.3, 1.2).density();
        let id = KrausChannel::identity(2).unwrap();
        assert!(linalg::max_abs(&(id.apply(&rho).unwrap().matrix() - rho.matrix())) < 1e-14);
        let dep = KrausChannel::depolarizing(2, 1.0).unwrap();
        assert_eq!(dep.kraus_ops().len(), 4);
        let zero = DensityMatrix::basis(qubit(), 0).unwrap();
        let out = dep.apply(&zero).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - DensityMatrix::maximally_mixed(qubit()).matrix())) < 1e-14);
        let dep3 = KrausChannel::depolarizing(3, 1.0).unwrap();
        let q3 = HilbertSpec::single(3).unwrap();
        let out = dep3.apply(&DensityMatrix::basis(q3.clone(), 2).unwrap()).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - DensityMatrix::maximally_mixed(q3).matrix())) < 1e-14);
    }

    #[test]
    fn xz_flip_two_thirds_shrinks_bloch_vectors_to_one_third() {
        let ch = KrausChannel::xz_flip(2.0 / 3.0).unwrap();
        for (t, p) in [(0.0, 0.0), (1.0, 0.5), (2.0, 4.0), (core::f64::consts::FRAC_PI_2, core::f64::consts::FRAC_PI_2)] {
            let out = ch.apply(&PureState::bloch(t, p).density()).unwrap();
            let m = out.matrix();
            let len = ((m[(0, 0)].re - m[(1, 1)].re).powi(2) + 4.0 * m[(0, 1)].norm_sqr()).sqrt();
            assert!((len - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn choi_examples() {
        let id = KrausChannel::identity(2).unwrap().to_choi();
        assert!(linalg::max_abs(&(id.matrix() - bell(0).matrix())) < 1e-14);
        let dep = KrausChannel::depolarizing(2, 1.0).unwrap().to_choi();
        assert!(linalg::max_abs(&(dep.matrix() - linalg::identity(4).scale(0.25))) < 1e-14);
        for p in [0.0, 0.3, 2.0 / 3.0, 1.0] {
            let choi = KrausChannel::xz_flip(p).unwrap().to_choi();
            let weights: Vec<f64> = (0..4).map(|i| bell_weight(&choi, i)).collect();
            let expected = [1.0 - p, p / 2.0, p / 2.0, 0.0];
            for (w, e) in weights.iter().zip(expected) {
                assert!((w - e).abs() < 1e-12, "p={p}: {weights:?}");
            }
            let reconstructed: CMatrix = (0..4).fold(CMatrix::zeros(4, 4), |acc, i| acc + bell(i).matrix().scale(expected[i]));
            assert!(linalg::max_abs(&(reconstructed - choi.matrix())) < 1e-12);
        }
    }

    #[test]
    fn choi_marginals_of_unital_channel() {
        let choi = KrausChannel::xz_flip(0.4).unwrap().to_choi();
        let half = DensityMatrix::maximally_mixed(qubit());
        for keep in [0, 1] {
            let m = choi.state().partial_trace(&[keep]).unwrap();
            assert!(linalg::max_abs(&(m.matrix() - half.matrix())) < 1e-12);
        }
    }

    #[test]
    fn choi_to_kraus_examples() {
        let id = KrausChannel::identity(2).unwrap().to_choi().to_kraus().unwrap();
        assert_eq!(id.kraus_ops().len(), 1);
        let k = &id.kraus_ops()[0];
        let phase = k[(0, 0)];
        assert!(linalg::max_abs(&(k - linalg::identity(2).map(|z| z * phase))) < 1e-12);
        assert!((phase.norm() - 1.0).abs() < 1e-12);

        let dep = KrausChannel::depolarizing(2, 1.0).unwrap().to_choi().to_kraus().unwrap();
        assert_eq!(dep.kraus_ops().len(), 4);
        for k in dep.kraus_ops() {
            assert!((k.iter().map(|z| z.norm_sqr()).sum::<f64>() - 0.5).abs() < 1e-12);
        }

        let choi = KrausChannel::xz_flip(1.0 / 3.0).unwrap().to_choi();
        let back = choi.to_kraus().unwrap().to_choi();
        assert!(choi.distance(&back).unwrap() < 1e-10);

        let bad = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.75, 0.0), c(-0.25, 0.0), c(0.25, 0.0), c(0.25, 0.0)]));
        assert!(ChoiState::new(bad, 2, 2).is_err());
    }

    #[test]
    fn choi_rejects_non_trace_preserving_marginal() {
        let m = bell(0).tensor(&DensityMatrix::maximally_mixed(qubit()));
        let product = DensityMatrix::basis(qubit(), 0).unwrap().tensor(&DensityMatrix::maximally_mixed(qubit()));
        assert!(matches!(ChoiState::from_state(product), Err(Error::ChoiMarginal { .. })));
        assert_eq!(ChoiState::from_state(m), Err(Error::NotBipartite));
    }

    #[test]
    fn apply_via_choi_examples() {
        let rho = PureState::bloch(2.2, -0.3).density();
        let id = KrausChannel::identity(2).unwrap().to_choi();
        assert!(linalg::max_abs(&(id.apply(&rho).unwrap().matrix() - rho.matrix())) < 1e-14);
        let ep = KrausChannel::xz_flip(2.0 / 3.0).unwrap().to_choi();
        let out = ep.apply(&DensityMatrix::basis(qubit(), 0).unwrap()).unwrap();
        assert!((out.matrix()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-14);
        assert!((out.matrix()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-14);
        assert!(out.matrix()[(0, 1)].norm() < 1e-14);
        assert!(ep.apply(&DensityMatrix::maximally_mixed(HilbertSpec::single(3).unwrap())).is_err());
    }

    #[test]
    fn stinespring_examples() {
        let id = KrausChannel::identity(2).unwrap().stinespring().unwrap();
        assert_eq!(id.ancilla_dim(), 1);
        assert!(linalg::max_abs(&(id.unitary() - linalg::identity(2))) < 1e-14);

        let dep = KrausChannel::depolarizing(2, 1.0).unwrap();
        let dil = dep.stinespring().unwrap();
        assert_eq!(dil.unitary().nrows(), 8);
        assert!(dil.to_kraus().unwrap().to_choi().distance(&dep.to_choi()).unwrap() < 1e-10);

        let ep = KrausChannel::xz_flip(2.0 / 3.0).unwrap();
        let dil = ep.stinespring().unwrap();
        assert_eq!(dil.ancilla_dim(), 3);
        assert!(dil.to_kraus().unwrap().to_choi().distance(&ep.to_choi()).unwrap() < 1e-10);
        let rho = PureState::bloch(0.9, 0.1).density();
        assert!(linalg::max_abs(&(dil.apply(&rho).unwrap().matrix() - ep.apply(&rho).unwrap().matrix())) < 1e-12);
    }

    #[test]
    fn mixing_examples() {
        let a = KrausChannel::xz_flip(0.25).unwrap();
        let b = KrausChannel::amplitude_damping(0.6).unwrap();
        assert!(a.mix(&b, 0.0).unwrap().to_choi().distance(&a.to_choi()).unwrap() < 1e-12);
        assert!(a.mix(&b, 1.0).unwrap().to_choi().distance(&b.to_choi()).unwrap() < 1e-12);
        assert!(a.mix(&b, -0.1).is_err());
        assert!(a.mix(&KrausChannel::identity(3).unwrap(), 0.5).is_err());

        let (p, r) = (0.4, 0.3);
        let eq = KrausChannel::xz_flip_depolarized(p, r).unwrap().to_choi();
        let expected = KrausChannel::xz_flip(p).unwrap().to_choi().matrix().scale(1.0 - r) + linalg::identity(4).scale(r / 4.0);
        assert!(linalg::max_abs(&(eq.matrix() - expected)) < 1e-12);
    }

    #[test]
    fn builtin_examples() {
        let ep0 = Builtin::XzFlip { p: 0.0 }.build().unwrap();
        assert!(ep0.to_choi().distance(&KrausChannel::identity(2).unwrap().to_choi()).unwrap() < 1e-14);
        let eq = Builtin::XzFlipDepolarized { p: 0.3, r: 0.0 }.build().unwrap();
        assert!(eq.to_choi().distance(&KrausChannel::xz_flip(0.3).unwrap().to_choi()).unwrap() < 1e-14);
        let third = Builtin::XzFlip { p: 2.0 / 3.0 }.build().unwrap().to_choi();
        for (i, w) in [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0].into_iter().enumerate() {
            assert!((bell_weight(&third, i) - w).abs() < 1e-12);
        }
        assert!(Builtin::AmplitudeDamping { gamma: 2.0 }.build().is_err());
    }

    #[test]
    fn composition_with_unitaries() {
        let x = KrausChannel::unitary(pauli_x()).unwrap();
        let twice = x.then(&x).unwrap();
        assert!(twice.to_choi().distance(&KrausChannel::identity(2).unwrap().to_choi()).unwrap() < 1e-12);
    }
}
