//! Dense complex linear algebra used throughout the crate.
//!
//! Tensor factors are ordered row-major: the first subsystem is the slowest
//! index of the flattened basis. Every partial operation here honours that
//! ordering.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
///
/// The input is hermitized first, so tiny anti-Hermitian noise is ignored.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

/// `(M + M^dag) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest elementwise modulus of `M - M^dag`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Rebuild `V diag(f(lambda)) V^dag`.
pub(crate) fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (col, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        for r in 0..n {
            scaled[(r, col)] *= w;
        }
    }
    &scaled * vectors.adjoint()
}

/// Frobenius-nearest positive semidefinite matrix (negative eigenvalues clamped to zero).
pub fn project_psd(m: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(m);
    if values.first().is_none_or(|&v| v >= 0.0) {
        return hermitize(m);
    }
    hermitize(&spectral_map(&values, &vectors, |l| l.max(0.0)))
}

/// Principal square root of a PSD matrix; negative eigenvalues are clamped first.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(m);
    spectral_map(&values, &vectors, |l| l.max(0.0).sqrt())
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|l| l.abs()).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Index arithmetic for a tensor product of subsystems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Self { dims: dims.to_vec(), strides, total: dims.iter().product() }
    }

    pub(crate) fn total(&self) -> usize {
        self.total
    }

    #[inline]
    pub(crate) fn digit(&self, index: usize, sys: usize) -> usize {
        (index / self.strides[sys]) % self.dims[sys]
    }

    /// Split a flat index into (index within `subset`, index within the complement).
    fn split(&self, index: usize, in_subset: &[bool]) -> (usize, usize) {
        let (mut a, mut b) = (0, 0);
        for (s, &inside) in in_subset.iter().enumerate().take(self.dims.len()) {
            let d = self.digit(index, s);
            if inside {
                a = a * self.dims[s] + d;
            } else {
                b = b * self.dims[s] + d;
            }
        }
        (a, b)
    }

    fn mask(&self, subset: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.dims.len()];
        for &s in subset {
            mask[s] = true;
        }
        mask
    }
}

/// Partial trace keeping the subsystems listed in `keep` (in increasing order).
pub(crate) fn partial_trace_raw(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let layout = Layout::new(dims);
    let mask = layout.mask(keep);
    let kept: usize = keep.iter().map(|&s| dims[s]).product();
    let traced = layout.total() / kept;
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept); traced];
    for i in 0..layout.total() {
        let (k, t) = layout.split(i, &mask);
        groups[t].push((i, k));
    }
    let mut out = CMatrix::zeros(kept, kept);
    for group in &groups {
        for &(i, ki) in group {
            for &(j, kj) in group {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    out
}

/// Transpose of the tensor factor `sys`.
pub(crate) fn partial_transpose_raw(m: &CMatrix, dims: &[usize], sys: usize) -> CMatrix {
    let layout = Layout::new(dims);
    let stride = layout.strides[sys];
    let n = layout.total();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        let di = layout.digit(i, sys);
        for j in 0..n {
            let dj = layout.digit(j, sys);
            let ii = i - di * stride + dj * stride;
            let jj = j - dj * stride + di * stride;
            out[(ii, jj)] = m[(i, j)];
        }
    }
    out
}

/// Embed `op` (acting on the subsystems `on`, increasing order) as `op ⊗ I` on the full space.
pub(crate) fn embed_raw(op: &CMatrix, dims: &[usize], on: &[usize]) -> CMatrix {
    let layout = Layout::new(dims);
    let mask = layout.mask(on);
    let n = layout.total();
    let parts: Vec<(usize, usize)> = (0..n).map(|i| layout.split(i, &mask)).collect();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if parts[i].1 == parts[j].1 {
                out[(i, j)] = op[(parts[i].0, parts[j].0)];
            }
        }
    }
    out
}

/// Flat-index map for relabelling subsystems: factor `s` of the input is moved to
/// position `perm[s]` of the output. `perm` must permute subsystems of equal dimension.
pub(crate) fn subsystem_permutation(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let layout = Layout::new(dims);
    (0..layout.total())
        .map(|i| (0..dims.len()).map(|s| layout.digit(i, s) * layout.strides[perm[s]]).sum())
        .collect()
}

/// Apply a flat index map as `P M P^dag`.
pub(crate) fn permute_with(m: &CMatrix, map: &[usize]) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// Orthonormal completion of the given orthonormal columns by Gram-Schmidt over the
/// standard basis, tried in index order.
pub(crate) fn complete_orthonormal(columns: &[Vec<Complex64>], n: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = columns.to_vec();
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![ZERO; n];
        v[e] = ONE;
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let overlap: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= overlap * bi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| c((i * n + j) as f64, (i as f64) - (j as f64) * 0.5))
    }

    #[test]
    fn permutations_are_lexicographic() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], [0, 1, 2]);
        assert_eq!(p[1], [0, 2, 1]);
        assert_eq!(p[5], [2, 1, 0]);
        assert_eq!(permutations(1), [[0]]);
    }

    #[test]
    fn partial_trace_of_kron_product() {
        let a = sample(2);
        let b = CMatrix::from_fn(3, 3, |i, j| if i == j { c(1.0 + i as f64, 0.0) } else { ZERO });
        let ab = kron(&a, &b);
        let ta = partial_trace_raw(&ab, &[2, 3], &[0]);
        assert!(max_abs(&(ta - a.scale(trace_re(&b)))) < 1e-12);
    }

    #[test]
    fn embed_is_adjoint_of_partial_trace() {
        let dims = [2, 3, 2];
        let x = sample(12);
        let y = sample(4);
        let lhs: Complex64 = partial_trace_raw(&x, &dims, &[0, 2]).component_mul(&y).sum();
        let rhs: Complex64 = x.component_mul(&embed_raw(&y, &dims, &[0, 2])).sum();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn partial_transpose_is_involution() {
        let x = sample(6);
        let t = partial_transpose_raw(&x, &[2, 3], 1);
        assert!(max_abs(&(partial_transpose_raw(&t, &[2, 3], 1) - &x)) < 1e-14);
        let full = partial_transpose_raw(&partial_transpose_raw(&x, &[2, 3], 0), &[2, 3], 1);
        assert!(max_abs(&(full - x.transpose())) < 1e-14);
    }

    #[test]
    fn subsystem_swap_exchanges_kron_factors() {
        let a = sample(2);
        let b = sample(2).adjoint();
        let map = subsystem_permutation(&[2, 2], &[1, 0]);
        assert!(max_abs(&(permute_with(&kron(&a, &b), &map) - kron(&b, &a))) < 1e-12);
    }

    #[test]
    fn completion_is_unitary() {
        let s = 1.0 / 2.0f64.sqrt();
        let cols = vec![vec![c(s, 0.0), ZERO, c(0.0, s), ZERO]];
        let basis = complete_orthonormal(&cols, 4);
        let u = CMatrix::from_fn(4, 4, |r, col| basis[col][r]);
        assert!(max_abs(&(&u * u.adjoint() - identity(4))) < 1e-12);
    }

    #[test]
    fn psd_projection_clamps() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0, 0.0), c(2.0, 0.0)]));
        let p = project_psd(&m);
        assert!((p[(0, 0)].re).abs() < 1e-14);
        assert!((p[(1, 1)].re - 2.0).abs() < 1e-14);
        assert!((pairwise_sum(&[1.0; 100]) - 100.0).abs() < 1e-12);
    }
}
