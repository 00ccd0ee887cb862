use nalgebra::DMatrix;
use num_complex::Complex64;
use qbcast_core::extendibility::{
    is_ppt, max_broadcast_number, max_marginal_deviation, test_k_extendible, BroadcastChannel, ExtensionProblem, HierarchyLevel, SolverConfig,
    Verdict,
};
use qbcast_core::linalg::eigvalsh;
use qbcast_core::random::{random_density, rng};
use qbcast_core::{DensityMatrix, HilbertSpec, KrausChannel};

/// Choi state of `depolarizing(2, 1 - f)`: `f φ+ + (1 - f) I/4`.
fn isotropic_channel(f: f64) -> KrausChannel {
    KrausChannel::depolarizing(2, 1.0 - f).unwrap()
}

fn verdict(ch: &KrausChannel, k: usize) -> Verdict {
    test_k_extendible(&ExtensionProblem::for_choi(&ch.to_choi(), k).unwrap(), &SolverConfig::default()).unwrap().verdict
}

// Oracle for 2-extendibility of qubit isotropic states. Twirling an extension
// with U ⊗ Ū ⊗ Ū keeps it an extension, so it suffices to search operators
// T_A(Σ_π c_π V_π) with V_π the permutations of three qubits, symmetric under
// B1 <-> B2. That leaves four real coefficients, two fixed by the marginal.

fn perm_op(perm: [usize; 3]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(8, 8);
    for idx in 0..8 {
        let bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        let mut out = [0; 3];
        for s in 0..3 {
            out[perm[s]] = bits[s];
        }
        let j = out[0] << 2 | out[1] << 1 | out[2];
        m[(j, idx)] = Complex64::new(1.0, 0.0);
    }
    m
}

fn transpose_first(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(8, 8, |r, c| {
        let (ra, rr) = (r >> 2, r & 3);
        let (ca, cr) = (c >> 2, c & 3);
        m[((ca << 2) | rr, (ra << 2) | cr)]
    })
}

fn trace_last(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |r, c| m[(2 * r, 2 * c)] + m[(2 * r + 1, 2 * c + 1)])
}

/// Coefficients of a 4 × 4 operator along `I/4` and `φ+` for operators in their span.
fn isotropic_coords(m: &DMatrix<Complex64>) -> (f64, f64) {
    let tr = (0..4).map(|i| m[(i, i)].re).sum::<f64>();
    let phi = (m[(0, 0)] + m[(0, 3)] + m[(3, 0)] + m[(3, 3)]).re / 2.0;
    // m = a I/4 + b φ+: tr = a + b, <φ+|m|φ+> = a/4 + b
    let b = (phi - tr / 4.0) / 0.75;
    (tr - b, b)
}

fn best_min_eigenvalue(f: f64) -> f64 {
    let basis = [
        perm_op([0, 1, 2]),
        perm_op([0, 2, 1]),
        &perm_op([1, 0, 2]) + &perm_op([2, 1, 0]),
        &perm_op([1, 2, 0]) + &perm_op([2, 0, 1]),
    ]
    .map(|v| transpose_first(&v));
    let coords = basis.clone().map(|x| isotropic_coords(&trace_last(&x)));
    // free coefficients c0, c1; c2, c3 from the marginal (target a = 1 - f, b = f)
    let (a2, b2) = coords[2];
    let (a3, b3) = coords[3];
    let det = a2 * b3 - a3 * b2;
    let solve = |c0: f64, c1: f64| -> f64 {
        let ra = (1.0 - f) - c0 * coords[0].0 - c1 * coords[1].0;
        let rb = f - c0 * coords[0].1 - c1 * coords[1].1;
        let c2 = (ra * b3 - a3 * rb) / det;
        let c3 = (a2 * rb - ra * b2) / det;
        let x = basis[0].scale(c0) + basis[1].scale(c1) + basis[2].scale(c2) + basis[3].scale(c3);
        eigvalsh(&x)[0]
    };
    // the minimum eigenvalue is concave in the coefficients: nested ternary search
    let maximize = |g: &dyn Fn(f64) -> f64| -> f64 {
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..80 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if g(m1) < g(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        g(0.5 * (lo + hi))
    };
    maximize(&|c0| maximize(&|c1| solve(c0, c1)))
}

fn oracle_isotropic_threshold() -> f64 {
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if best_min_eigenvalue(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn isotropic_two_extendibility_threshold_matches_oracle() {
    let threshold = oracle_isotropic_threshold();
    assert!((threshold - 2.0 / 3.0).abs() < 1e-4, "oracle threshold {threshold}");
    assert_eq!(verdict(&isotropic_channel(threshold - 0.01), 2), Verdict::Extendible);
    assert_eq!(verdict(&isotropic_channel(threshold + 0.01), 2), Verdict::NotExtendible);
}

#[test]
fn random_separable_states_extend() {
    let mut r = rng(2024);
    let q = HilbertSpec::single(2).unwrap();
    for trial in 0..20 {
        let mut m = DMatrix::zeros(4, 4);
        for _ in 0..4 {
            let a = random_density(&q, 2, &mut r);
            let b = random_density(&q, 2, &mut r);
            m += a.tensor(&b).into_matrix();
        }
        let rho = DensityMatrix::normalized(HilbertSpec::bipartite(2, 2).unwrap(), m).unwrap();
        for k in [2, 3] {
            let cert = test_k_extendible(&ExtensionProblem::new(rho.clone(), k).unwrap(), &SolverConfig::default()).unwrap();
            assert_eq!(cert.verdict, Verdict::Extendible, "trial {trial} k {k}");
            assert!(max_marginal_deviation(cert.extension.as_ref().unwrap(), &rho).unwrap() <= 1e-7);
        }
    }
}

#[test]
fn hierarchy_is_nested() {
    // a 3-extension traced down is a 2-extension
    let ch = KrausChannel::xz_flip(0.4).unwrap();
    let choi = ch.to_choi();
    let cert = test_k_extendible(&ExtensionProblem::for_choi(&choi, 3).unwrap(), &SolverConfig::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Extendible);
    let reduced = cert.extension.unwrap().partial_trace(&[0, 1, 2]).unwrap();
    assert!(max_marginal_deviation(&reduced, choi.state()).unwrap() <= 1e-7);
    // and failing at k fails beyond it
    let ch = KrausChannel::xz_flip(0.2).unwrap();
    for k in 2..=4 {
        assert_eq!(verdict(&ch, k), Verdict::NotExtendible, "k={k}");
    }
}

#[test]
fn solver_is_deterministic() {
    let ch = KrausChannel::amplitude_damping(0.7).unwrap();
    let problem = ExtensionProblem::for_choi(&ch.to_choi(), 2).unwrap();
    let a = test_k_extendible(&problem, &SolverConfig::default()).unwrap();
    let b = test_k_extendible(&problem, &SolverConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn symmetric_and_full_searches_agree() {
    for (ch, expected) in [(KrausChannel::xz_flip(0.8).unwrap(), Verdict::Extendible), (KrausChannel::identity(2).unwrap(), Verdict::NotExtendible)] {
        let problem = ExtensionProblem::for_choi(&ch.to_choi(), 2).unwrap();
        let cfg = SolverConfig::default();
        assert_eq!(test_k_extendible(&problem, &cfg).unwrap().verdict, expected);
        assert_eq!(test_k_extendible(&problem.clone().without_symmetry(), &cfg).unwrap().verdict, expected);
    }
}

#[test]
fn separable_xz_flip_broadcasts_end_to_end() {
    let choi = KrausChannel::xz_flip(0.8).unwrap().to_choi();
    let cert = test_k_extendible(&ExtensionProblem::for_choi(&choi, 2).unwrap(), &SolverConfig::default()).unwrap();
    let bc = BroadcastChannel::from_extension(cert.extension.unwrap()).unwrap();
    let mut r = rng(8);
    let q = HilbertSpec::single(2).unwrap();
    for _ in 0..20 {
        let rho = random_density(&q, 2, &mut r);
        bc.verify_broadcasting(&rho, 1e-6).unwrap();
    }
    for party in 1..=2 {
        assert!(bc.local_choi(party).unwrap().distance(&choi).unwrap() < 1e-6);
    }
}

fn rank(level: HierarchyLevel) -> usize {
    level.lower().unwrap_or(usize::MAX)
}

#[test]
fn xz_flip_sweep_level_is_monotone() {
    let mut previous = 0;
    for i in 0..=8 {
        let p = i as f64 / 10.0;
        let level = max_broadcast_number(&KrausChannel::xz_flip(p).unwrap(), 3, &SolverConfig::default()).unwrap().level;
        assert!(rank(level) >= previous, "p={p} level={level}");
        previous = rank(level);
        if p >= 0.5 {
            assert_eq!(level, HierarchyLevel::Infinite);
        }
    }
}

#[test]
fn xz_flip_ppt_threshold_is_one_half() {
    let ppt = |p: f64| is_ppt(KrausChannel::xz_flip(p).unwrap().to_choi().state()).unwrap().ppt;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if ppt(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Choi weights (1-p, p/2, p/2, 0) on the Bell basis; separable iff 1-p <= 1/2
    assert!((hi - 0.5).abs() < 1e-5, "{hi}");
}
