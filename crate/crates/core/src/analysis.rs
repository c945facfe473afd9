//! Conditioning, isotropy, manipulability and singularity classification.

use std::fmt;

use crate::error::AnalysisError;
use crate::kinematics::{jacobians, JacobianSet, KinematicState};
use crate::linalg::{svd, symmetric_eigen, Mat3, Vec3};
use crate::model::MachineGeometry;
use crate::scalar::Real;

/// Which definition of the condition number to report.
///
/// `Rooted` is √(σ_L/σ_S) and is the default; `Ratio` is the conventional
/// σ_L/σ_S. Both equal 1 exactly at an isotropic matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConditionVariant {
    #[default]
    Rooted,
    Ratio,
}

impl ConditionVariant {
    pub fn label(self) -> &'static str {
        match self {
            ConditionVariant::Rooted => "rooted",
            ConditionVariant::Ratio => "ratio",
        }
    }
}

/// Condition number from the singular values; `+∞` when σ_S ≤ 1e-300.
pub fn condition_number<T: Real>(m: &Mat3<T>, variant: ConditionVariant) -> Result<T, AnalysisError> {
    if !m.is_finite() {
        return Err(AnalysisError::NonFinite);
    }
    Ok(condition_from_singular_values(&svd(m).sigma, variant))
}

fn condition_from_singular_values<T: Real>(sigma: &[T; 3], variant: ConditionVariant) -> T {
    let (largest, smallest) = (sigma[0], sigma[2]);
    if smallest <= T::lit(1e-300) {
        return T::infinity();
    }
    let ratio = largest / smallest;
    match variant {
        ConditionVariant::Rooted => ratio.sqrt(),
        ConditionVariant::Ratio => ratio,
    }
}

/// Principal axes of the velocity ellipsoid `ṗᵀ(JJᵀ)⁻¹ṗ ≤ 1`.
///
/// `xi[k]` is the square root of the `k`-th eigenvalue of `(JJᵀ)⁻¹`, with
/// `axes[k]` its eigenvector, and `psi[k] = 1/xi[k]` is the velocity
/// amplification along that axis. Sorted so that `psi` is descending.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Manipulability<T> {
    pub axes: [Vec3<T>; 3],
    pub xi: [T; 3],
    pub psi: [T; 3],
}

pub fn manipulability<T: Real>(jac: &JacobianSet<T>) -> Result<Manipulability<T>, AnalysisError> {
    let j = jac.j.ok_or(AnalysisError::Unavailable("J"))?;
    manipulability_of(&j)
}

/// Ellipsoid of an explicit Jacobian, by eigen-decomposition of `(JJᵀ)⁻¹`.
pub fn manipulability_of<T: Real>(j: &Mat3<T>) -> Result<Manipulability<T>, AnalysisError> {
    if !j.is_finite() {
        return Err(AnalysisError::NonFinite);
    }
    let metric = j
        .mul_mat(&j.transpose())
        .inverse()
        .ok_or(AnalysisError::Unavailable("(JJᵀ)⁻¹"))?;
    let eig = symmetric_eigen(&metric);
    // Eigenvalues come out descending, so ξ descends and ψ = 1/ξ ascends.
    let mut axes = [Vec3::zeros(); 3];
    let mut xi = [T::zero(); 3];
    for k in 0..3 {
        let src = 2 - k;
        axes[k] = eig.vectors.column(src);
        xi[k] = eig.values[src].max(T::zero()).sqrt();
    }
    let psi = xi.map(|x| T::one() / x);
    Ok(Manipulability { axes, xi, psi })
}

/// Residuals of the three isotropy condition groups, indexed by leg pair
/// `(1,2), (2,3), (3,1)` or by leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropyResiduals<T> {
    /// Pairwise differences of `‖cᵢ − bᵢ‖/ηᵢ`.
    pub ratio_spread: [T; 3],
    /// Pairwise dot products of the links.
    pub link_dots: [T; 3],
    /// `‖cᵢ − bᵢ‖/ηᵢ − 1`.
    pub unit_deviation: [T; 3],
}

impl<T: Real> IsotropyResiduals<T> {
    pub fn max_abs(&self) -> T {
        self.ratio_spread
            .iter()
            .chain(&self.link_dots)
            .chain(&self.unit_deviation)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropyCheck<T> {
    pub isotropic: bool,
    pub residuals: IsotropyResiduals<T>,
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Tests the isotropy conditions on `J⁻¹`. The link dot products carry
/// units of length²; they are compared after dividing by `L²`.
pub fn isotropy_check<T: Real>(
    geom: &MachineGeometry<T>,
    state: &KinematicState<T>,
    tol: T,
) -> Result<IsotropyCheck<T>, AnalysisError> {
    let jac = jacobians(geom, state);
    if !jac.serial_singular_legs().is_empty() {
        return Err(AnalysisError::Unavailable("J⁻¹"));
    }
    let links = [0, 1, 2].map(|i| state.link(i));
    let ratio = [0, 1, 2].map(|i| links[i].norm() / jac.eta[i]);
    let l2 = geom.leg_length * geom.leg_length;
    let residuals = IsotropyResiduals {
        ratio_spread: PAIRS.map(|(i, j)| ratio[i] - ratio[j]),
        link_dots: PAIRS.map(|(i, j)| links[i].dot(&links[j]) / l2),
        unit_deviation: ratio.map(|r| r - T::one()),
    };
    Ok(IsotropyCheck { isotropic: residuals.max_abs() <= tol, residuals })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParallelKind {
    /// det A = 0 with links spanning a plane.
    Coplanar,
    /// All links mutually parallel.
    ParallelLinks,
}

/// Singularity status. Serial and parallel singularities can co-occur.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    /// 0-based legs with `|ηᵢ| ≤ ε_B`.
    pub serial_legs: Vec<usize>,
    pub parallel: Option<ParallelKind>,
}

impl Classification {
    pub fn is_regular(&self) -> bool {
        self.serial_legs.is_empty() && self.parallel.is_none()
    }

    pub fn is_serial_singular(&self) -> bool {
        !self.serial_legs.is_empty()
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_regular() {
            return write!(f, "regular");
        }
        let mut parts = Vec::new();
        if !self.serial_legs.is_empty() {
            let legs: Vec<String> = self.serial_legs.iter().map(|l| (l + 1).to_string()).collect();
            parts.push(format!("serial_singular({})", legs.join(",")));
        }
        if let Some(kind) = self.parallel {
            parts.push(match kind {
                ParallelKind::Coplanar => "parallel_singular(coplanar)".to_string(),
                ParallelKind::ParallelLinks => "parallel_singular(parallel_links)".to_string(),
            });
        }
        write!(f, "{}", parts.join("+"))
    }
}

/// Classifies using the tolerances stored in `jac`. A parallel singularity
/// is `parallel_links` when every pairwise cross product of A's rows has
/// norm at most `ε_A^(2/3)`, otherwise `coplanar`.
pub fn classify_singularity<T: Real>(jac: &JacobianSet<T>) -> Classification {
    let parallel = jac.is_parallel_singular().then(|| {
        let cross_tol = jac.tolerances.det_a.powf(T::lit(2.0) / T::lit(3.0));
        let all_parallel = PAIRS
            .iter()
            .all(|&(i, j)| jac.a.row(i).cross(&jac.a.row(j)).norm() <= cross_tol);
        if all_parallel {
            ParallelKind::ParallelLinks
        } else {
            ParallelKind::Coplanar
        }
    });
    Classification { serial_legs: jac.serial_singular_legs(), parallel }
}

/// Everything known about one configuration. Quantities that need an
/// unavailable matrix are `None`; `classification` says why.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport<T> {
    pub kappa_rooted: Option<T>,
    pub kappa_ratio: Option<T>,
    /// Singular values of `J⁻¹`, descending.
    pub singular_values: Option<[T; 3]>,
    /// Singular values of `J`, descending.
    pub psi: Option<[T; 3]>,
    pub ellipsoid: Option<Manipulability<T>>,
    pub eta: [T; 3],
    pub det_a: T,
    pub det_b: T,
    pub classification: Classification,
}

pub fn analyze<T: Real>(geom: &MachineGeometry<T>, state: &KinematicState<T>) -> AnalysisReport<T> {
    analyze_jacobians(&jacobians(geom, state))
}

pub fn analyze_jacobians<T: Real>(jac: &JacobianSet<T>) -> AnalysisReport<T> {
    let singular_values = jac.j_inv.map(|m| svd(&m).sigma);
    let psi = jac.j.map(|m| svd(&m).sigma);
    AnalysisReport {
        kappa_rooted: singular_values.map(|s| condition_from_singular_values(&s, ConditionVariant::Rooted)),
        kappa_ratio: singular_values.map(|s| condition_from_singular_values(&s, ConditionVariant::Ratio)),
        singular_values,
        psi,
        ellipsoid: manipulability(jac).ok(),
        eta: jac.eta,
        det_a: jac.det_a,
        det_b: jac.det_b,
        classification: classify_singularity(jac),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{inverse_kinematics, Tolerances, DEFAULT_BRANCHES};
    use crate::model::canonical_orthoglide;

    fn state_at(p: [f64; 3]) -> (MachineGeometry<f64>, KinematicState<f64>) {
        let g = canonical_orthoglide(1.0).unwrap();
        let s = inverse_kinematics(&g, Vec3(p), DEFAULT_BRANCHES).unwrap();
        (g, s)
    }

    #[test]
    fn condition_of_identity() {
        for v in [ConditionVariant::Rooted, ConditionVariant::Ratio] {
            assert_eq!(condition_number(&Mat3::<f64>::identity(), v).unwrap(), 1.0);
        }
    }

    #[test]
    fn condition_of_diagonal() {
        let m = Mat3::from_diagonal([2.0, 1.0, 0.5]);
        assert_eq!(condition_number(&m, ConditionVariant::Rooted).unwrap(), 2.0);
        assert_eq!(condition_number(&m, ConditionVariant::Ratio).unwrap(), 4.0);
    }

    #[test]
    fn condition_of_rank_deficient() {
        let m = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        assert_eq!(condition_number(&m, ConditionVariant::Rooted).unwrap(), f64::INFINITY);
    }

    #[test]
    fn condition_rejects_nan() {
        let mut m = Mat3::<f64>::identity();
        m.rows[1][2] = f64::NAN;
        assert_eq!(condition_number(&m, ConditionVariant::Ratio), Err(AnalysisError::NonFinite));
    }

    #[test]
    fn manipulability_isotropic_sphere() {
        let m = manipulability_of(&Mat3::<f64>::identity()).unwrap();
        assert_eq!(m.xi, [1.0; 3]);
        assert_eq!(m.psi, [1.0; 3]);
    }

    #[test]
    fn manipulability_diagonal() {
        let m = manipulability_of(&Mat3::<f64>::from_diagonal([3.0, 1.0, 1.0 / 3.0])).unwrap();
        for (got, want) in m.psi.iter().zip([3.0f64, 1.0, 1.0 / 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((m.axes[0].x().abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn manipulability_needs_j() {
        let jac = JacobianSet::from_parts(
            Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]),
            [1.0; 3],
            Tolerances::for_leg_length(1.0),
        );
        assert_eq!(manipulability(&jac), Err(AnalysisError::Unavailable("J")));
    }

    #[test]
    fn isotropy_at_center() {
        let (g, s) = state_at([0.0; 3]);
        let check = isotropy_check(&g, &s, 1e-12).unwrap();
        assert!(check.isotropic);
        assert_eq!(check.residuals.max_abs(), 0.0);
    }

    #[test]
    fn isotropy_fails_off_center() {
        let (g, s) = state_at([0.0, 0.5, 0.0]);
        let check = isotropy_check(&g, &s, 1e-9).unwrap();
        assert!(!check.isotropic);
        // (c₁ − b₁)·(c₂ − b₂) = (√.75, .5, 0)·(0, 1, 0).
        assert!((check.residuals.link_dots[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn isotropy_scaled_machine() {
        let g = canonical_orthoglide(2.5).unwrap();
        let s = inverse_kinematics(&g, Vec3::zeros(), DEFAULT_BRANCHES).unwrap();
        assert_eq!(s.rho().rho, [-2.5; 3]);
        assert!(isotropy_check(&g, &s, 1e-12).unwrap().isotropic);
    }

    #[test]
    fn isotropy_unavailable_when_serial_singular() {
        let (g, s) = state_at([0.0, 1.0, 0.0]);
        assert!(isotropy_check(&g, &s, 1e-9).is_err());
    }

    #[test]
    fn classify_regular() {
        let jac = JacobianSet::from_parts(Mat3::identity(), [1.0; 3], Tolerances::for_leg_length(1.0));
        let c = classify_singularity(&jac);
        assert!(c.is_regular());
        assert_eq!(c.to_string(), "regular");
    }

    #[test]
    fn classify_coplanar() {
        let jac = JacobianSet::from_parts(
            Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]),
            [1.0; 3],
            Tolerances::for_leg_length(1.0),
        );
        let c = classify_singularity(&jac);
        assert_eq!(c.parallel, Some(ParallelKind::Coplanar));
        assert!(c.serial_legs.is_empty());
        assert_eq!(c.to_string(), "parallel_singular(coplanar)");
    }

    #[test]
    fn classify_serial_state() {
        let (g, s) = state_at([0.0, 1.0, 0.0]);
        let c = classify_singularity(&jacobians(&g, &s));
        // Legs 1 and 3 have their struts ⊥ their axes; all links are along y.
        assert_eq!(c.serial_legs, vec![0, 2]);
        assert_eq!(c.parallel, Some(ParallelKind::ParallelLinks));
        assert_eq!(c.to_string(), "serial_singular(1,3)+parallel_singular(parallel_links)");
    }

    #[test]
    fn report_at_center() {
        let (g, s) = state_at([0.0; 3]);
        let r = analyze(&g, &s);
        assert_eq!(r.kappa_rooted, Some(1.0));
        assert_eq!(r.kappa_ratio, Some(1.0));
        assert_eq!(r.psi, Some([1.0; 3]));
        assert!(r.classification.is_regular());
    }

    #[test]
    fn report_off_center() {
        let (g, s) = state_at([0.0, 0.5, 0.0]);
        let r = analyze(&g, &s);
        // η = (√.75, 1, √.75).
        assert!((r.det_b - 0.75).abs() < 1e-15);
        let k = r.kappa_rooted.unwrap();
        assert!((k * k - r.kappa_ratio.unwrap()).abs() < 1e-12);
        let psi = r.psi.unwrap();
        let ell = r.ellipsoid.unwrap();
        for i in 0..3 {
            assert!((psi[i] * ell.xi[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn report_serial_singular_is_partial() {
        let (g, s) = state_at([0.0, 1.0, 0.0]);
        let r = analyze(&g, &s);
        assert!(r.classification.is_serial_singular());
        assert!(r.psi.is_none() && r.kappa_rooted.is_none() && r.ellipsoid.is_none());
        assert_eq!(r.det_b, 0.0);
    }
}
