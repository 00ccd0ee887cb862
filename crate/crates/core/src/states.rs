//! Density matrices, pure states and the distance measures between them.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
#[allow(unused_imports)]
use num_traits::Float;

/// Hermiticity tolerance for [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;
/// Norm tolerance for [`PureState`].
pub const NORM_TOL: f64 = 1e-12;

/// Subsystem dimensions of a tensor-product Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpec {
    dims: Vec<usize>,
}

impl HilbertSpec {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimensions("no subsystems"));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidDimensions("zero-dimensional subsystem"));
        }
        if dims.iter().product::<usize>() < 2 {
            return Err(Error::InvalidDimensions("total dimension must be at least 2"));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    /// Single system of dimension `d`.
    pub fn single(d: usize) -> Result<Self> {
        Self::new(&[d])
    }

    pub fn bipartite(d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(&[d_a, d_b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.dims.len() {
            return Err(Error::IndexOutOfRange { index, len: self.dims.len() });
        }
        Ok(())
    }

    /// Spec of the listed subsystems (sorted, deduplicated).
    fn restrict(&self, keep: &[usize]) -> Result<(Vec<usize>, HilbertSpec)> {
        if keep.is_empty() {
            return Err(Error::InvalidDimensions("nothing to keep"));
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        for &k in &keep {
            self.check_index(k)?;
        }
        let dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        Ok((keep, HilbertSpec::new(&dims)?))
    }
}

/// A trace-one positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpec,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap `matrix`. The stored matrix is exactly Hermitian.
    pub fn new(space: HilbertSpec, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let deviation = linalg::hermiticity_defect(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = linalg::trace_re(&matrix);
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace });
        }
        let matrix = linalg::hermitize(&matrix);
        let min_eigenvalue = linalg::min_eigenvalue(&matrix);
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { space, matrix })
    }

    /// Hermitize and divide by the trace before validating.
    pub fn normalized(space: HilbertSpec, matrix: CMatrix) -> Result<Self> {
        let trace = linalg::trace_re(&matrix);
        if !trace.is_finite() || trace.abs() < 1e-300 {
            return Err(Error::TraceNotOne { trace });
        }
        Self::new(space, linalg::hermitize(&matrix).unscale(trace))
    }

    pub(crate) fn from_parts_unchecked(space: HilbertSpec, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: HilbertSpec) -> Self {
        let n = space.total_dim();
        Self { space, matrix: linalg::identity(n).unscale(n as f64) }
    }

    /// `|k><k|` in the computational basis.
    pub fn basis(space: HilbertSpec, k: usize) -> Result<Self> {
        let n = space.total_dim();
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = linalg::ONE;
        Ok(Self { space, matrix: m })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `self ⊗ other`, subsystems concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.space.dims.clone();
        dims.extend_from_slice(&other.space.dims);
        Self {
            space: HilbertSpec { dims },
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }

    /// Reduced state on the subsystems in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (keep, spec) = self.space.restrict(keep)?;
        let reduced = linalg::partial_trace_raw(&self.matrix, &self.space.dims, &keep);
        Ok(Self { space: spec, matrix: linalg::hermitize(&reduced) })
    }

    /// Transpose of one tensor factor. The result is Hermitian with unit trace but
    /// may have negative eigenvalues, so it is returned as a bare matrix.
    pub fn partial_transpose(&self, subsystem: usize) -> Result<CMatrix> {
        self.space.check_index(subsystem)?;
        Ok(linalg::partial_transpose_raw(&self.matrix, &self.space.dims, subsystem))
    }

    fn check_same_space(&self, other: &DensityMatrix) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: HilbertSpec,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(space: HilbertSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { space, amplitudes })
    }

    /// Normalize `amplitudes` before wrapping.
    pub fn normalized(space: HilbertSpec, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(space, amplitudes)
    }

    /// Qubit state `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self {
            space: HilbertSpec { dims: alloc::vec![2] },
            amplitudes: alloc::vec![Complex64::new(c, 0.0), Complex64::from_polar(s, phi)],
        }
    }

    /// `sum_i |ii> / sqrt(d)` on `d ⊗ d`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        let space = HilbertSpec::bipartite(d, d)?;
        let mut amps = alloc::vec![linalg::ZERO; d * d];
        let w = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            amps[i * d + i] = Complex64::new(w, 0.0);
        }
        Ok(Self { space, amplitudes: amps })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn projector_matrix(&self) -> CMatrix {
        let n = self.amplitudes.len();
        CMatrix::from_fn(n, n, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { space: self.space.clone(), matrix: self.projector_matrix() }
    }

    /// `<ψ|σ|ψ>`.
    pub fn expectation(&self, sigma: &CMatrix) -> f64 {
        let n = self.amplitudes.len();
        let mut acc = linalg::ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.amplitudes[i].conj() * sigma[(i, j)] * self.amplitudes[j];
            }
        }
        acc.re
    }
}

/// Uhlmann fidelity `tr sqrt(sqrt(ρ) σ sqrt(ρ))`, not squared, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_space(sigma)?;
    Ok(fidelity_matrices(&rho.matrix, &sigma.matrix))
}

/// Fidelity of a pure state with a density matrix, `sqrt(<ψ|σ|ψ>)`.
pub fn fidelity_pure(psi: &PureState, sigma: &DensityMatrix) -> Result<f64> {
    if psi.space != sigma.space {
        return Err(Error::DimensionMismatch { expected: psi.space.total_dim(), found: sigma.dim() });
    }
    Ok(psi.expectation(&sigma.matrix).max(0.0).sqrt().min(1.0))
}

/// Eigenvalues (and 2x2 determinants) below this are treated as exact zeros before
/// square roots are taken; rounding noise on a rank-deficient state would otherwise
/// surface as an O(1e-8) fidelity error.
const RANK_CUTOFF: f64 = 1e-14;

pub(crate) fn fidelity_matrices(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let f = if rho.nrows() == 2 {
        // F^2 = tr(ρσ) + 2 sqrt(det ρ det σ) for 2x2 matrices
        let overlap = (rho * sigma).trace().re;
        let det = |m: &CMatrix| {
            let d = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
            if d < RANK_CUTOFF { 0.0 } else { d }
        };
        (overlap + 2.0 * (det(rho) * det(sigma)).sqrt()).max(0.0).sqrt()
    } else {
        // F = ||sqrt(ρ) sqrt(σ)||_1
        let root = |m: &CMatrix| {
            let (values, vectors) = linalg::eigh(m);
            linalg::spectral_map(&values, &vectors, |l| if l < RANK_CUTOFF { 0.0 } else { l.sqrt() })
        };
        (root(rho) * root(sigma)).singular_values().iter().sum()
    };
    f.clamp(0.0, 1.0)
}

/// Trace distance `||ρ - σ||_1 / 2`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_space(sigma)?;
    Ok(trace_distance_matrices(&rho.matrix, &sigma.matrix))
}

pub(crate) fn trace_distance_matrices(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let diff = rho - sigma;
    let d = if diff.nrows() == 2 {
        let a = diff[(0, 0)].re;
        let b = diff[(1, 1)].re;
        let off = diff[(0, 1)].norm_sqr();
        let mean = 0.5 * (a + b);
        let radius = (0.25 * (a - b) * (a - b) + off).sqrt();
        0.5 * ((mean + radius).abs() + (mean - radius).abs())
    } else {
        0.5 * linalg::trace_norm_hermitian(&diff)
    };
    d.clamp(0.0, 1.0)
}

/// Haar-random pure state: a normalized vector of independent standard complex Gaussians.
pub fn haar_pure<R: Rng + ?Sized>(space: &HilbertSpec, rng: &mut R) -> PureState {
    loop {
        let amps: Vec<Complex64> = (0..space.total_dim())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(psi) = PureState::normalized(space.clone(), amps) {
            return psi;
        }
    }
}

/// [`haar_pure`] driven by a fresh generator seeded with `seed`.
pub fn haar_pure_seeded(space: &HilbertSpec, seed: u64) -> PureState {
    haar_pure(space, &mut crate::random::rng(seed))
}
