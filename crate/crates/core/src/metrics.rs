//! Gate-level figures of merit between two channels.
//!
//! Average quantities integrate a state-level measure over Haar-random pure
//! inputs; worst-case quantities optimize it over pure inputs. Pure inputs are
//! enough for the worst case: fidelity is jointly concave, so a mixed input can
//! never do worse than the worst pure state in its decomposition.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, CMatrix};
use crate::random;
use crate::states::{fidelity_matrices, haar_pure, trace_distance_matrices, HilbertSpec, PureState};
#[allow(unused_imports)]
use num_traits::Float;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_f1de;
/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// How to evaluate the integral over pure input states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMethod {
    MonteCarlo { samples: usize, seed: u64 },
    /// Gauss-Legendre in `cos θ` times a uniform grid in `φ`; qubits only.
    BlochQuadrature { polar: usize, azimuthal: usize },
}

impl AverageMethod {
    pub const fn monte_carlo() -> Self {
        AverageMethod::MonteCarlo { samples: DEFAULT_SAMPLES, seed: DEFAULT_SEED }
    }

    /// 32 × 64 product rule.
    pub const fn quadrature() -> Self {
        AverageMethod::BlochQuadrature { polar: 32, azimuthal: 64 }
    }
}

/// How to search for the worst pure input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeMethod {
    /// Bloch grid on `(θ, φ)` then coordinate descent; qubits only.
    BlochGrid { polar: usize, azimuthal: usize, refinement: usize },
    /// Seeded random starts followed by coordinate descent on the amplitude sphere.
    MultiStart { starts: usize, rounds: usize, seed: u64 },
}

impl MinimizeMethod {
    pub const fn grid() -> Self {
        MinimizeMethod::BlochGrid { polar: 200, azimuthal: 400, refinement: 50 }
    }

    pub const fn multi_start() -> Self {
        MinimizeMethod::MultiStart { starts: 16, rounds: 200, seed: DEFAULT_SEED }
    }

    /// Grid for qubits, multi-start otherwise.
    pub fn for_dim(d: usize) -> Self {
        if d == 2 {
            Self::grid()
        } else {
            Self::multi_start()
        }
    }
}

/// Which estimator produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { polar: usize, azimuthal: usize },
    GridMin { polar: usize, azimuthal: usize, refinement: usize },
    MultiStart { starts: usize, rounds: usize, seed: u64 },
}

/// A gate-level value with the metadata of its estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub value: f64,
    pub estimator: Estimator,
    /// Present only for Monte Carlo estimates.
    pub std_error: Option<f64>,
    /// Optimizing input for worst-case estimates.
    pub minimizer: Option<PureState>,
}

/// Average or minimum gate fidelity.
pub type FidelityReport = GateReport;
/// Average or maximum gate distance.
pub type DistanceReport = GateReport;

/// Pointwise state measure compared across the two channel outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measure {
    Fidelity,
    TraceDistance,
}

impl Measure {
    fn eval(self, a: &CMatrix, b: &CMatrix) -> f64 {
        match self {
            Measure::Fidelity => fidelity_matrices(a, b),
            Measure::TraceDistance => trace_distance_matrices(a, b),
        }
    }
}

struct Pair<'a> {
    e: &'a KrausChannel,
    f: &'a KrausChannel,
    measure: Measure,
}

impl<'a> Pair<'a> {
    fn new(e: &'a KrausChannel, f: &'a KrausChannel, measure: Measure) -> Result<Self> {
        if e.d_in() != f.d_in() {
            return Err(Error::DimensionMismatch { expected: e.d_in(), found: f.d_in() });
        }
        if e.d_out() != f.d_out() {
            return Err(Error::DimensionMismatch { expected: e.d_out(), found: f.d_out() });
        }
        Ok(Self { e, f, measure })
    }

    fn at(&self, amps: &[Complex64]) -> f64 {
        self.measure.eval(&self.e.apply_pure(amps), &self.f.apply_pure(amps))
    }

    fn dim(&self) -> usize {
        self.e.d_in()
    }
}

/// Average gate fidelity `∫ dψ F(E[ψ], F[ψ])`.
pub fn avg_gate_fidelity(e: &KrausChannel, f: &KrausChannel, method: &AverageMethod) -> Result<FidelityReport> {
    average(&Pair::new(e, f, Measure::Fidelity)?, method)
}

/// Average gate distance `∫ dψ D(E[ψ], F[ψ])`.
pub fn avg_gate_distance(e: &KrausChannel, f: &KrausChannel, method: &AverageMethod) -> Result<DistanceReport> {
    average(&Pair::new(e, f, Measure::TraceDistance)?, method)
}

/// Minimum gate fidelity `min_ψ F(E[ψ], F[ψ])`.
pub fn min_gate_fidelity(e: &KrausChannel, f: &KrausChannel, method: &MinimizeMethod) -> Result<FidelityReport> {
    optimize(&Pair::new(e, f, Measure::Fidelity)?, method, 1.0)
}

/// Worst-case gate distance `max_ψ D(E[ψ], F[ψ])`.
pub fn max_gate_distance(e: &KrausChannel, f: &KrausChannel, method: &MinimizeMethod) -> Result<DistanceReport> {
    optimize(&Pair::new(e, f, Measure::TraceDistance)?, method, -1.0)
}

fn average(pair: &Pair<'_>, method: &AverageMethod) -> Result<GateReport> {
    match *method {
        AverageMethod::MonteCarlo { samples, seed } => {
            let n = samples.max(1);
            let space = HilbertSpec::single(pair.dim())?;
            // the whole sample list is drawn before any evaluation
            let mut rng = random::rng(seed);
            let inputs: Vec<PureState> = (0..n).map(|_| haar_pure(&space, &mut rng)).collect();
            let values: Vec<f64> = inputs.iter().map(|psi| pair.at(psi.amplitudes())).collect();
            let mean = pairwise_sum(&values) / n as f64;
            let std_error = if n > 1 {
                let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
                (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
            } else {
                0.0
            };
            Ok(GateReport {
                value: mean.clamp(0.0, 1.0),
                estimator: Estimator::MonteCarlo { samples: n, seed },
                std_error: Some(std_error),
                minimizer: None,
            })
        }
        AverageMethod::BlochQuadrature { polar, azimuthal } => {
            if pair.dim() != 2 {
                return Err(Error::QuadratureUnsupported { dim: pair.dim() });
            }
            let rule = BlochRule::new(polar, azimuthal);
            let values: Vec<f64> = rule.nodes.iter().map(|node| node.weight * pair.at(&node.amplitudes)).collect();
            Ok(GateReport {
                value: pairwise_sum(&values).clamp(0.0, 1.0),
                estimator: Estimator::Quadrature { polar: rule.polar, azimuthal: rule.azimuthal },
                std_error: None,
                minimizer: None,
            })
        }
    }
}

/// Minimizes `sign * measure` and reports `sign * min`.
fn optimize(pair: &Pair<'_>, method: &MinimizeMethod, sign: f64) -> Result<GateReport> {
    let objective = |amps: &[Complex64]| sign * pair.at(amps);
    match *method {
        MinimizeMethod::BlochGrid { polar, azimuthal, refinement } => {
            if pair.dim() != 2 {
                return Err(Error::QuadratureUnsupported { dim: pair.dim() });
            }
            let (value, theta, phi) = bloch_grid_minimum(&|t, p| objective(PureState::bloch(t, p).amplitudes()), polar, azimuthal, refinement);
            Ok(GateReport {
                value: sign * value,
                estimator: Estimator::GridMin { polar, azimuthal, refinement },
                std_error: None,
                minimizer: Some(PureState::bloch(theta, phi)),
            })
        }
        MinimizeMethod::MultiStart { starts, rounds, seed } => {
            let space = HilbertSpec::single(pair.dim())?;
            let (value, amps) = multi_start_minimum(&objective, &space, starts, rounds, seed);
            Ok(GateReport {
                value: sign * value,
                estimator: Estimator::MultiStart { starts, rounds, seed },
                std_error: None,
                minimizer: Some(PureState::normalized(space, amps)?),
            })
        }
    }
}

/// Grid search on `θ ∈ [0, π]`, `φ ∈ [0, 2π)` followed by coordinate descent.
/// Ties on the grid go to the lowest index.
fn bloch_grid_minimum(f: &dyn Fn(f64, f64) -> f64, polar: usize, azimuthal: usize, refinement: usize) -> (f64, f64, f64) {
    let polar = polar.max(2);
    let azimuthal = azimuthal.max(1);
    let d_theta = PI / (polar - 1) as f64;
    let d_phi = 2.0 * PI / azimuthal as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..polar {
        let theta = d_theta * i as f64;
        for j in 0..azimuthal {
            let phi = d_phi * j as f64;
            let v = f(theta, phi);
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let (mut value, mut theta, mut phi) = best;
    let (mut st, mut sp) = (d_theta, d_phi);
    for _ in 0..refinement {
        let candidates = [(theta + st, phi), (theta - st, phi), (theta, phi + sp), (theta, phi - sp)];
        let mut improved = None;
        for (t, p) in candidates {
            let t = t.clamp(0.0, PI);
            let v = f(t, p);
            if v < improved.map_or(value, |(bv, _, _)| bv) {
                improved = Some((v, t, p));
            }
        }
        match improved {
            Some((v, t, p)) => {
                let gain = value - v;
                (value, theta, phi) = (v, t, p);
                if gain < 1e-10 {
                    st *= 0.5;
                    sp *= 0.5;
                }
            }
            None => {
                st *= 0.5;
                sp *= 0.5;
            }
        }
        if st < 1e-12 && sp < 1e-12 {
            break;
        }
    }
    let phi = phi % (2.0 * PI);
    (value, theta, if phi < 0.0 { phi + 2.0 * PI } else { phi })
}

fn multi_start_minimum(
    f: &dyn Fn(&[Complex64]) -> f64,
    space: &HilbertSpec,
    starts: usize,
    rounds: usize,
    seed: u64,
) -> (f64, Vec<Complex64>) {
    let d = space.total_dim();
    let mut rng = random::rng(seed);
    let mut initial: Vec<Vec<Complex64>> = (0..d)
        .map(|k| (0..d).map(|i| if i == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect();
    initial.extend((0..starts).map(|_| haar_pure(space, &mut rng).amplitudes().to_vec()));

    let normalize = |v: &mut Vec<Complex64>| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= n;
        }
    };

    let mut best = (f64::INFINITY, initial[0].clone());
    for mut x in initial {
        let mut value = f(&x);
        let mut step = 0.25;
        for _ in 0..rounds {
            let mut moved = false;
            for coord in 0..2 * d {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    let delta = if coord % 2 == 0 { Complex64::new(dir * step, 0.0) } else { Complex64::new(0.0, dir * step) };
                    y[coord / 2] += delta;
                    normalize(&mut y);
                    let v = f(&y);
                    if v < value - 1e-15 {
                        value = v;
                        x = y;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
                if step < 1e-9 {
                    break;
                }
            }
        }
        if value < best.0 {
            best = (value, x);
        }
    }
    best
}

struct BlochNode {
    weight: f64,
    amplitudes: [Complex64; 2],
}

/// Product rule on the Bloch sphere normalized to the uniform probability measure.
struct BlochRule {
    polar: usize,
    azimuthal: usize,
    nodes: Vec<BlochNode>,
}

impl BlochRule {
    fn new(polar: usize, azimuthal: usize) -> Self {
        let polar = polar.max(1);
        let azimuthal = azimuthal.max(1);
        let (xs, ws) = gauss_legendre(polar);
        let mut nodes = Vec::with_capacity(polar * azimuthal);
        for (x, w) in xs.iter().zip(&ws) {
            let theta = x.clamp(-1.0, 1.0).acos();
            for j in 0..azimuthal {
                let phi = 2.0 * PI * (j as f64 + 0.5) / azimuthal as f64;
                let (s, c) = (theta / 2.0).sin_cos();
                nodes.push(BlochNode {
                    weight: 0.5 * w / azimuthal as f64,
                    amplitudes: [Complex64::new(c, 0.0), Complex64::from_polar(s, phi)],
                });
            }
        }
        Self { polar, azimuthal, nodes }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = alloc::vec![0.0; n];
    let mut ws = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(32);
        assert!((ws.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        // ∫ x^2 = 2/3, ∫ x^10 = 2/11
        let moment = |k: i32| xs.iter().zip(&ws).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((moment(2) - 2.0 / 3.0).abs() < 1e-13);
        assert!((moment(10) - 2.0 / 11.0).abs() < 1e-13);
        assert!(moment(7).abs() < 1e-13);
        let (x3, w3) = gauss_legendre(3);
        assert!((x3[2] - (0.6f64).sqrt()).abs() < 1e-14);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_weights_form_a_probability_measure() {
        let rule = BlochRule::new(32, 64);
        assert_eq!(rule.nodes.len(), 2048);
        assert!((rule.nodes.iter().map(|n| n.weight).sum::<f64>() - 1.0).abs() < 1e-13);
        // <|<0|ψ>|^2> = 1/2
        let m: f64 = rule.nodes.iter().map(|n| n.weight * n.amplitudes[0].norm_sqr()).sum();
        assert!((m - 0.5).abs() < 1e-13);
    }

    #[test]
    fn self_comparison_is_perfect() {
        let e = KrausChannel::amplitude_damping(0.3).unwrap();
        for method in [AverageMethod::quadrature(), AverageMethod::MonteCarlo { samples: 500, seed: 1 }] {
            let f = avg_gate_fidelity(&e, &e, &method).unwrap();
            assert!((f.value - 1.0).abs() < 1e-10);
            assert!(avg_gate_distance(&e, &e, &method).unwrap().value < 1e-10);
        }
        assert!((min_gate_fidelity(&e, &e, &MinimizeMethod::grid()).unwrap().value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_rejects_qudits() {
        let e = KrausChannel::identity(3).unwrap();
        assert_eq!(avg_gate_fidelity(&e, &e, &AverageMethod::quadrature()), Err(Error::QuadratureUnsupported { dim: 3 }));
        assert!(min_gate_fidelity(&e, &e, &MinimizeMethod::grid()).is_err());
        assert!(avg_gate_fidelity(&e, &KrausChannel::identity(2).unwrap(), &AverageMethod::monte_carlo()).is_err());
    }

    #[test]
    fn report_metadata() {
        let e = KrausChannel::identity(2).unwrap();
        let f = KrausChannel::depolarizing(2, 1.0).unwrap();
        let mc = avg_gate_fidelity(&e, &f, &AverageMethod::MonteCarlo { samples: 100, seed: 9 }).unwrap();
        assert!(mc.std_error.is_some());
        assert_eq!(mc.estimator, Estimator::MonteCarlo { samples: 100, seed: 9 });
        let q = avg_gate_fidelity(&e, &f, &AverageMethod::quadrature()).unwrap();
        assert!(q.std_error.is_none());
        let m = min_gate_fidelity(&e, &f, &MinimizeMethod::grid()).unwrap();
        assert!(m.minimizer.is_some());
    }

    #[test]
    fn multi_start_handles_qutrits() {
        let e = KrausChannel::identity(3).unwrap();
        let f = KrausChannel::depolarizing(3, 1.0).unwrap();
        let m = min_gate_fidelity(&e, &f, &MinimizeMethod::multi_start()).unwrap();
        assert!((m.value - (1.0f64 / 3.0).sqrt()).abs() < 1e-9);
        let dist = max_gate_distance(&e, &f, &MinimizeMethod::multi_start()).unwrap();
        assert!((dist.value - 2.0 / 3.0).abs() < 1e-9);
    }
}
