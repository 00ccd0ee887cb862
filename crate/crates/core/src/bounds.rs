//! Distance to the entanglement-breaking set and the gate-fidelity floor it implies.
//!
//! For a channel `E`, an entanglement-breaking channel `E_EB` and a noise model `N`
//! on a `d`-dimensional input,
//!
//! ```text
//! D(E[ρ], E_EB[ρ]) ≤ d · D(χ_E, χ_EB)
//! F̄(E, N) ≥ 1 - d · D(χ_E, χ_EB) - d · D̄(E_EB, N)
//! ```
//!
//! The first line holds for any pair of channels since
//! `E[ρ] - F[ρ] = d tr_A[(χ_E - χ_F)(ρ^T ⊗ I)]`. The second follows from
//! `1 - F ≤ D` and the triangle inequality, and holds for every EB channel. The
//! floor here uses the Frobenius projection of `χ_E` onto the PPT Choi states:
//! not the trace-distance minimizer, but a genuine EB point whenever PPT is
//! equivalent to separability (`d_in · d_out ≤ 6`), so the resulting floor is valid.

use alloc::format;
use alloc::string::String;

use crate::channels::{ChoiState, KrausChannel};
use crate::error::{Error, Result};
use crate::extendibility::{max_broadcast_number, HierarchyLevel, SolverConfig};
use crate::linalg::{self, CMatrix};
use crate::metrics::{avg_gate_distance, avg_gate_fidelity, min_gate_fidelity, AverageMethod, MinimizeMethod};
use crate::states::{trace_distance, trace_distance_matrices, DensityMatrix};
#[allow(unused_imports)]
use num_traits::Float;

/// Stopping rule for the projection onto PPT Choi states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// Frobenius change between sweeps below which the iteration stops.
    pub step_tol: f64,
    pub max_iterations: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { step_tol: 1e-12, max_iterations: 100_000 }
    }
}

/// Outcome of [`eb_distance`].
#[derive(Debug, Clone, PartialEq)]
pub struct EbDistanceResult {
    /// PPT Choi state closest to the input in Frobenius norm.
    pub nearest_eb_choi: ChoiState,
    pub frobenius_distance: f64,
    /// Trace distance to `nearest_eb_choi`; an upper bound on the distance to the EB set.
    pub trace_distance_upper: f64,
    pub iterations: usize,
    /// Weight of `I/D` mixed in to clear rounding-level negative eigenvalues.
    pub mixing: f64,
    /// `false` when PPT does not imply separability at these dimensions.
    pub exact: bool,
}

impl EbDistanceResult {
    pub fn nearest_eb_channel(&self) -> Result<KrausChannel> {
        self.nearest_eb_choi.to_kraus()
    }
}

/// Dykstra projection of `χ_E` onto `{X ≥ 0} ∩ {X^{T_B} ≥ 0} ∩ {tr_B X = I/d_A}`.
pub fn eb_distance(channel: &KrausChannel, config: &ProjectionConfig) -> Result<EbDistanceResult> {
    let choi = channel.to_choi();
    let (d_a, d_b) = (choi.d_a(), choi.d_b());
    let dims = [d_a, d_b];
    let chi = choi.matrix();
    let n = d_a * d_b;

    let marginal_target = linalg::identity(d_a).unscale(d_a as f64);
    let affine = |x: &CMatrix| -> CMatrix {
        let excess = linalg::partial_trace_raw(x, &dims, &[0]) - &marginal_target;
        linalg::hermitize(&(x - linalg::kron(&excess, &linalg::identity(d_b)).unscale(d_b as f64)))
    };
    let ppt = |x: &CMatrix| -> CMatrix {
        let t = linalg::project_psd(&linalg::partial_transpose_raw(x, &dims, 1));
        linalg::partial_transpose_raw(&t, &dims, 1)
    };

    let mut x = chi.clone();
    let mut psd_increment = CMatrix::zeros(n, n);
    let mut ppt_increment = CMatrix::zeros(n, n);
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let y = affine(&x);
        let shifted = &y + &psd_increment;
        let z = linalg::project_psd(&shifted);
        psd_increment = shifted - &z;
        let shifted = &z + &ppt_increment;
        let w = ppt(&shifted);
        ppt_increment = shifted - &w;
        step = linalg::frobenius(&(&w - &x));
        x = w;
        if step < config.step_tol {
            break;
        }
    }
    if step >= config.step_tol {
        return Err(Error::NoConvergence { residual: step, iterations });
    }

    // The affine step keeps the marginal exact; mixing with I/D then removes the
    // residual negativity of X and X^{T_B} without moving the marginal.
    let y = affine(&x);
    let floor = 1.0 / n as f64;
    let negativity = (-linalg::min_eigenvalue(&y)).max(-linalg::min_eigenvalue(&linalg::partial_transpose_raw(&y, &dims, 1))).max(0.0);
    let mixing = negativity / (negativity + floor);
    let point = y.scale(1.0 - mixing) + linalg::identity(n).scale(mixing * floor);
    let nearest = ChoiState::new(linalg::hermitize(&point), d_a, d_b)?;

    Ok(EbDistanceResult {
        frobenius_distance: linalg::frobenius(&(chi - nearest.matrix())),
        trace_distance_upper: trace_distance_matrices(chi, nearest.matrix()),
        nearest_eb_choi: nearest,
        iterations,
        mixing,
        exact: d_a * d_b <= 6,
    })
}

/// Both sides of `D(E[ρ], F[ρ]) ≤ d · D(χ_E, χ_F)` for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBound {
    pub left: f64,
    pub right: f64,
}

impl DistanceBound {
    pub const SLACK: f64 = 1e-9;

    pub fn holds(&self) -> bool {
        self.left <= self.right + Self::SLACK
    }
}

/// `d · D(χ_e, χ_eb)` together with the output distance on `rho` it bounds.
pub fn channel_distance_bound(e: &KrausChannel, rho: &DensityMatrix, eb: &KrausChannel) -> Result<DistanceBound> {
    if e.d_in() != eb.d_in() || e.d_out() != eb.d_out() {
        return Err(Error::DimensionMismatch { expected: e.d_in() * e.d_out(), found: eb.d_in() * eb.d_out() });
    }
    let right = e.d_in() as f64 * e.to_choi().distance(&eb.to_choi())?;
    let left = trace_distance(&e.apply(rho)?, &eb.apply(rho)?)?;
    Ok(DistanceBound { left, right })
}

/// Settings shared by [`fidelity_floor`] and [`assessment_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorConfig {
    /// Largest `k` tried when placing the channel in the extendibility hierarchy.
    pub k_max: usize,
    pub solver: SolverConfig,
    pub projection: ProjectionConfig,
    pub average: AverageMethod,
    pub minimize: MinimizeMethod,
}

impl FloorConfig {
    /// Quadrature and grid search for qubits, Monte Carlo and multi-start otherwise.
    pub fn for_dim(d: usize) -> Self {
        Self {
            k_max: 3,
            solver: SolverConfig::default(),
            projection: ProjectionConfig::default(),
            average: if d == 2 { AverageMethod::quadrature() } else { AverageMethod::monte_carlo() },
            minimize: MinimizeMethod::for_dim(d),
        }
    }
}

impl Default for FloorConfig {
    fn default() -> Self {
        Self::for_dim(2)
    }
}

/// Lower bound on `F̄(e, noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityFloor {
    pub k_level: HierarchyLevel,
    /// `d · D(χ_e, χ_EB)`.
    pub delta_eb: f64,
    /// `d · D̄(E_EB, noise)`.
    pub noise_gap: f64,
    /// `max(0, 1 - delta_eb - noise_gap)`.
    pub floor: f64,
    pub eb: EbDistanceResult,
}

impl FidelityFloor {
    /// The unclamped bound is nonpositive, so it certifies nothing.
    pub fn is_vacuous(&self) -> bool {
        self.floor <= 0.0
    }
}

/// The noise-independent part of the floor: distance to the EB set and the
/// hierarchy level. Reusable across noise models.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorAnalysis {
    pub eb: EbDistanceResult,
    pub k_level: HierarchyLevel,
    nearest: KrausChannel,
    d: f64,
    average: AverageMethod,
}

impl FloorAnalysis {
    pub fn new(e: &KrausChannel, config: &FloorConfig) -> Result<Self> {
        let eb = eb_distance(e, &config.projection)?;
        let nearest = eb.nearest_eb_channel()?;
        let k_level = max_broadcast_number(e, config.k_max, &config.solver)?.level;
        Ok(Self { eb, k_level, nearest, d: e.d_in() as f64, average: config.average })
    }

    pub fn nearest_eb_channel(&self) -> &KrausChannel {
        &self.nearest
    }

    pub fn floor(&self, noise: &KrausChannel) -> Result<FidelityFloor> {
        let delta_eb = self.d * self.eb.trace_distance_upper;
        let noise_gap = self.d * avg_gate_distance(&self.nearest, noise, &self.average)?.value;
        let floor = (1.0 - delta_eb - noise_gap).clamp(0.0, 1.0);
        Ok(FidelityFloor { k_level: self.k_level, delta_eb, noise_gap, floor, eb: self.eb.clone() })
    }
}

pub fn fidelity_floor(e: &KrausChannel, noise: &KrausChannel, config: &FloorConfig) -> Result<FidelityFloor> {
    FloorAnalysis::new(e, config)?.floor(noise)
}

/// Noise models whose own average fidelity reaches this make a high measured
/// fidelity uninformative.
pub const UNINFORMATIVE_NOISE_FIDELITY: f64 = 0.95;

/// How a measured fidelity relates to what the floor guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentReport {
    /// `F̄(e, realized)`.
    pub avg_fidelity: f64,
    /// `F_min(e, realized)`.
    pub min_fidelity: f64,
    /// `F̄(e, noise)`: what the modeled worst case already achieves.
    pub noise_fidelity: f64,
    pub floor: FidelityFloor,
    /// `avg_fidelity - floor`.
    pub margin: f64,
    /// The noise model alone reaches [`UNINFORMATIVE_NOISE_FIDELITY`].
    pub high_fidelity_uninformative: bool,
    pub verdict: String,
}

pub fn assessment_report(e: &KrausChannel, realized: &KrausChannel, noise: &KrausChannel, config: &FloorConfig) -> Result<AssessmentReport> {
    let avg_fidelity = avg_gate_fidelity(e, realized, &config.average)?.value;
    let min_fidelity = min_gate_fidelity(e, realized, &config.minimize)?.value;
    let noise_fidelity = avg_gate_fidelity(e, noise, &config.average)?.value;
    let floor = fidelity_floor(e, noise, config)?;
    let margin = avg_fidelity - floor.floor;
    let high_fidelity_uninformative = noise_fidelity >= UNINFORMATIVE_NOISE_FIDELITY;
    let verdict = verdict_text(avg_fidelity, noise_fidelity, &floor, margin, high_fidelity_uninformative);
    Ok(AssessmentReport { avg_fidelity, min_fidelity, noise_fidelity, floor, margin, high_fidelity_uninformative, verdict })
}

/// Margins below this are reported as none.
const MARGIN_RESOLUTION: f64 = 1e-9;

fn verdict_text(avg: f64, noise_fidelity: f64, floor: &FidelityFloor, margin: f64, uninformative: bool) -> String {
    let mut text = if floor.is_vacuous() {
        format!(
            "Measured average fidelity {avg:.6}. The floor is vacuous (clamped to 0): the channel sits {:.4} from the entanglement-breaking set, so no fidelity is guaranteed against this noise model.",
            floor.delta_eb
        )
    } else if margin < 0.0 {
        format!(
            "Measured average fidelity {avg:.6} is below the floor {:.6} by {:.6}: the realization is worse than the modeled worst-case noise.",
            floor.floor, -margin
        )
    } else if margin < MARGIN_RESOLUTION {
        format!("Measured average fidelity {avg:.6} meets the floor {:.6} with no margin.", floor.floor)
    } else {
        format!("Measured average fidelity {avg:.6} exceeds the floor {:.6} by {margin:.6} (out of a possible {:.6}).", floor.floor, 1.0 - floor.floor)
    };
    if uninformative {
        text.push_str(&format!(
            " The modeled worst-case noise already reaches {noise_fidelity:.6}, so a high fidelity by itself does not show the operation was implemented well."
        ));
    }
    if !floor.eb.exact {
        text.push_str(" PPT was used in place of separability at this dimension, so the floor is not certified.");
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{HilbertSpec, PureState};

    #[test]
    fn identity_projects_onto_the_isotropic_boundary() {
        let r = eb_distance(&KrausChannel::identity(2).unwrap(), &ProjectionConfig::default()).unwrap();
        assert!((r.trace_distance_upper - 0.5).abs() < 1e-6, "{}", r.trace_distance_upper);
        let phi = PureState::max_entangled(2).unwrap().projector_matrix();
        let expected = phi.scale(1.0 / 3.0) + linalg::identity(4).scale(1.0 / 6.0);
        assert!(linalg::max_abs(&(r.nearest_eb_choi.matrix() - expected)) < 1e-6);
        assert!(r.exact);
    }

    #[test]
    fn eb_channels_are_at_distance_zero() {
        for ch in [KrausChannel::depolarizing(2, 1.0).unwrap(), KrausChannel::xz_flip(0.8).unwrap()] {
            let r = eb_distance(&ch, &ProjectionConfig::default()).unwrap();
            assert!(r.trace_distance_upper < 1e-9);
            assert_eq!(r.mixing, 0.0);
        }
    }

    #[test]
    fn bound_is_zero_for_identical_channels() {
        let ch = KrausChannel::amplitude_damping(0.3).unwrap();
        let rho = PureState::bloch(0.4, 1.1).density();
        let b = channel_distance_bound(&ch, &rho, &ch).unwrap();
        assert!(b.left < 1e-12 && b.right < 1e-12);
    }

    #[test]
    fn identity_against_depolarizer_bound() {
        let id = KrausChannel::identity(2).unwrap();
        let dep = KrausChannel::depolarizing(2, 1.0).unwrap();
        let rho = DensityMatrix::basis(HilbertSpec::single(2).unwrap(), 0).unwrap();
        let b = channel_distance_bound(&id, &rho, &dep).unwrap();
        assert!((b.right - 1.5).abs() < 1e-12);
        assert!((b.left - 0.5).abs() < 1e-12);
        assert!(b.holds());
    }

    #[test]
    fn floor_is_one_for_eb_channel_against_itself() {
        let dep = KrausChannel::depolarizing(2, 1.0).unwrap();
        let f = fidelity_floor(&dep, &dep, &FloorConfig::default()).unwrap();
        assert!(f.delta_eb < 1e-8 && f.noise_gap < 1e-8);
        assert!((f.floor - 1.0).abs() < 1e-8);
        assert_eq!(f.k_level, HierarchyLevel::Infinite);
    }

    #[test]
    fn xz_flip_two_thirds_floor() {
        let e = KrausChannel::xz_flip(2.0 / 3.0).unwrap();
        let noise = KrausChannel::xz_flip_depolarized(2.0 / 3.0, 1.0).unwrap();
        let f = fidelity_floor(&e, &noise, &FloorConfig::default()).unwrap();
        assert!(f.delta_eb < 1e-8);
        assert!((f.noise_gap - 1.0 / 3.0).abs() < 1e-8, "{}", f.noise_gap);
        assert!((f.floor - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn identity_floor_is_vacuous() {
        let e = KrausChannel::identity(2).unwrap();
        let noise = KrausChannel::depolarizing(2, 1.0).unwrap();
        let report = assessment_report(&e, &noise, &noise, &FloorConfig::default()).unwrap();
        assert!(report.floor.is_vacuous());
        assert!(report.floor.floor == 0.0);
        assert!(report.verdict.contains("vacuous"));
        assert!(report.floor.k_level.is_private());
    }

    #[test]
    fn uninformative_noise_is_flagged() {
        let e = KrausChannel::xz_flip(2.0 / 3.0).unwrap();
        let noise = KrausChannel::xz_flip_depolarized(2.0 / 3.0, 1.0).unwrap();
        let realized = KrausChannel::xz_flip_depolarized(2.0 / 3.0, 0.5).unwrap();
        let report = assessment_report(&e, &realized, &noise, &FloorConfig::default()).unwrap();
        assert!(report.avg_fidelity > 0.98);
        assert!(report.high_fidelity_uninformative);
        assert!(report.verdict.contains("does not show"));
    }

    #[test]
    fn realized_equal_to_target_has_maximal_margin() {
        let e = KrausChannel::xz_flip(0.7).unwrap();
        let noise = KrausChannel::depolarizing(2, 1.0).unwrap();
        let report = assessment_report(&e, &e, &noise, &FloorConfig::default()).unwrap();
        assert!((report.avg_fidelity - 1.0).abs() < 1e-12);
        assert!((report.margin - (1.0 - report.floor.floor)).abs() < 1e-12);
    }
}
