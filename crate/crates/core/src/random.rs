//! Seeded random objects: Haar unitaries, random states and random channels.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::channels::KrausChannel;
use crate::linalg::{self, CMatrix};
use crate::states::{haar_pure, DensityMatrix, HilbertSpec};
#[allow(unused_imports)]
use num_traits::Float;

/// The generator used for every seeded routine in the crate.
pub type SeededRng = ChaCha20Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-random `n × n` unitary (QR of a Ginibre matrix with the phases of `R` removed).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for col in 0..n {
        let d = r[(col, col)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        for row in 0..n {
            q[(row, col)] *= phase;
        }
    }
    q
}

/// Random mixed state of rank at most `rank`: `G G^dag / tr` with `G` Ginibre `n × rank`.
pub fn random_density<R: Rng + ?Sized>(space: &HilbertSpec, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(space.total_dim(), rank.max(1), rng);
    DensityMatrix::normalized(space.clone(), &g * g.adjoint()).expect("Ginibre product is a valid state")
}

/// Random CPTP map on dimension `d` with `n_kraus` Kraus operators, cut from the first
/// `d` columns of a Haar unitary on `d · n_kraus`.
pub fn random_channel<R: Rng + ?Sized>(d: usize, n_kraus: usize, rng: &mut R) -> KrausChannel {
    let n = n_kraus.max(1);
    let u = haar_unitary(d * n, rng);
    let ops: Vec<CMatrix> = (0..n).map(|i| CMatrix::from_fn(d, d, |a, x| u[(a * n + i, x)])).collect();
    KrausChannel::new(d, d, ops).expect("isometry slices are complete")
}

/// Random entanglement-breaking channel: measure in a Haar-random basis, then prepare
/// a random mixed state per outcome.
pub fn random_eb_channel<R: Rng + ?Sized>(d: usize, rng: &mut R) -> KrausChannel {
    let basis = haar_unitary(d, rng);
    let space = HilbertSpec::single(d).expect("d >= 2");
    let mut ops = Vec::new();
    for i in 0..d {
        let prepared = random_density(&space, d, rng);
        let (values, vectors) = linalg::eigh(prepared.matrix());
        for (j, &lambda) in values.iter().enumerate() {
            let w = lambda.max(0.0).sqrt();
            ops.push(CMatrix::from_fn(d, d, |a, x| vectors[(a, j)] * basis[(x, i)].conj() * w));
        }
    }
    KrausChannel::new(d, d, ops).expect("measure-and-prepare is complete")
}

/// Random pure state density matrix.
pub fn random_pure_density<R: Rng + ?Sized>(space: &HilbertSpec, rng: &mut R) -> DensityMatrix {
    haar_pure(space, rng).density()
}
