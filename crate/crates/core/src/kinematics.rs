//! Position kinematics and the velocity Jacobians.
//!
//! Velocities satisfy `A·ṗ = B·ρ̇` where row `i` of `A` is `(cᵢ − bᵢ)ᵀ` and
//! `B = diag(η)` with `ηᵢ = (cᵢ − bᵢ)·axisᵢ`. The idle revolute and
//! parallelogram rates of each leg drop out after projecting the loop
//! velocity onto the link direction, so they are never represented.

use crate::error::KinematicsError;
use crate::linalg::{Mat3, Vec3};
use crate::model::{CartesianPoint, JointVector, MachineGeometry};
use crate::scalar::Real;

/// IK root for one leg: `ρᵢ = uᵢ ± √(L² − wᵢ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign<T: Real>(self) -> T {
        match self {
            Branch::Plus => T::one(),
            Branch::Minus => -T::one(),
        }
    }
}

/// The carriage sits behind the platform along its axis, so every `ηᵢ > 0`.
pub const DEFAULT_BRANCHES: [Branch; 3] = [Branch::Minus; 3];

/// Relative closure tolerance, floored at the scalar's resolution.
fn closure_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// A closed configuration: every link has length `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicState<T> {
    p: CartesianPoint<T>,
    rho: JointVector<T>,
    b: [Vec3<T>; 3],
    c: [Vec3<T>; 3],
    branch: [Branch; 3],
    within_limits: bool,
}

impl<T: Real> KinematicState<T> {
    /// Assembles a state from a platform position and joint vector,
    /// rejecting it when some link length differs from `L` by more than
    /// `1e-9·L`.
    pub fn new(geom: &MachineGeometry<T>, p: CartesianPoint<T>, rho: JointVector<T>) -> Result<Self, KinematicsError> {
        if !p.is_finite() || !rho.is_finite() {
            return Err(KinematicsError::NonFinite);
        }
        let b = [0, 1, 2].map(|i| geom.legs[i].anchor + geom.legs[i].axis.scale(rho.rho[i]));
        let c = [0, 1, 2].map(|i| p + geom.legs[i].platform_offset);
        let tol = closure_tolerance::<T>() * geom.leg_length;
        let worst = (0..3)
            .map(|i| ((c[i] - b[i]).norm() - geom.leg_length).abs())
            .fold(T::zero(), T::max);
        if !(worst <= tol) {
            return Err(KinematicsError::NotClosed(worst.as_f64()));
        }
        let branch = [0, 1, 2].map(|i| {
            if (c[i] - b[i]).dot(&geom.legs[i].axis) >= T::zero() {
                Branch::Minus
            } else {
                Branch::Plus
            }
        });
        Ok(Self { p, rho, b, c, branch, within_limits: rho.within(&geom.joint_limits) })
    }

    pub fn p(&self) -> CartesianPoint<T> {
        self.p
    }

    pub fn rho(&self) -> JointVector<T> {
        self.rho
    }

    /// Carriage points Bᵢ.
    pub fn b(&self) -> &[Vec3<T>; 3] {
        &self.b
    }

    /// Platform joint points Cᵢ.
    pub fn c(&self) -> &[Vec3<T>; 3] {
        &self.c
    }

    pub fn branch(&self) -> [Branch; 3] {
        self.branch
    }

    /// Whether ρ lies inside the geometry's joint limits.
    pub fn within_limits(&self) -> bool {
        self.within_limits
    }

    /// Link vector `cᵢ − bᵢ`.
    pub fn link(&self, i: usize) -> Vec3<T> {
        self.c[i] - self.b[i]
    }

    /// `‖cᵢ − bᵢ‖ − L` per leg.
    pub fn closure_residuals(&self, leg_length: T) -> [T; 3] {
        [0, 1, 2].map(|i| self.link(i).norm() - leg_length)
    }
}

/// Solves for ρ given the platform position, one root per leg.
pub fn inverse_kinematics<T: Real>(
    geom: &MachineGeometry<T>,
    p: CartesianPoint<T>,
    branch: [Branch; 3],
) -> Result<KinematicState<T>, KinematicsError> {
    if !p.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    let l2 = geom.leg_length * geom.leg_length;
    let mut rho = [T::zero(); 3];
    let mut unreachable = Vec::new();
    for (i, leg) in geom.legs.iter().enumerate() {
        let rel = p + leg.platform_offset - leg.anchor;
        let along = rel.dot(&leg.axis);
        // Squared distance from Cᵢ to the travel line.
        let perp = (rel - leg.axis.scale(along)).norm_squared();
        if perp > l2 {
            unreachable.push((i + 1, perp.as_f64()));
            continue;
        }
        rho[i] = along + branch[i].sign::<T>() * (l2 - perp).sqrt();
    }
    if !unreachable.is_empty() {
        return Err(KinematicsError::Unreachable(unreachable));
    }
    KinematicState::new(geom, p, JointVector::new(rho))
}

/// Platform position for a joint vector by intersecting the three spheres
/// of radius `L` centred at `bᵢ − dᵢ`.
///
/// With a `hint`, the root nearest to it is returned. Otherwise the root
/// whose links all have `ηᵢ > 0` wins; if both qualify, the one with the
/// larger coordinate sum.
pub fn forward_kinematics<T: Real>(
    geom: &MachineGeometry<T>,
    rho: JointVector<T>,
    hint: Option<CartesianPoint<T>>,
) -> Result<KinematicState<T>, KinematicsError> {
    if !rho.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    let centers =
        [0, 1, 2].map(|i| geom.legs[i].anchor + geom.legs[i].axis.scale(rho.rho[i]) - geom.legs[i].platform_offset);
    let e = centers[1] - centers[0];
    let f = centers[2] - centers[0];
    let normal = e.cross(&f);
    let n2 = normal.norm_squared();
    let scale = e.norm_squared().max(f.norm_squared());
    if !(n2 > T::epsilon() * scale * scale) {
        return Err(KinematicsError::DegenerateAssembly);
    }

    // Circumcentre of the three sphere centres: q₀ + αe + βf with
    // 2e·x = |e|² and 2f·x = |f|².
    let (ee, ff, ef) = (e.dot(&e), f.dot(&f), e.dot(&f));
    let two = T::lit(2.0);
    let alpha = ff * (ee - ef) / (two * n2);
    let beta = ee * (ff - ef) / (two * n2);
    let offset = e.scale(alpha) + f.scale(beta);
    let circumcenter = centers[0] + offset;
    let h2 = geom.leg_length * geom.leg_length - offset.norm_squared();
    if h2 < T::zero() {
        return Err(KinematicsError::NoAssembly);
    }
    let step = normal.scale(h2.sqrt() / n2.sqrt());
    let roots = [circumcenter + step, circumcenter - step];

    let states: Vec<_> = roots.iter().map(|&p| KinematicState::new(geom, p, rho)).collect();
    if let Some(h) = hint {
        let pick = if (roots[0] - h).norm_squared() <= (roots[1] - h).norm_squared() { 0 } else { 1 };
        return states[pick].clone();
    }
    let admissible = |s: &Result<KinematicState<T>, KinematicsError>| {
        s.as_ref().is_ok_and(|s| (0..3).all(|i| s.link(i).dot(&geom.legs[i].axis) > T::zero()))
    };
    match (admissible(&states[0]), admissible(&states[1])) {
        (true, true) => {
            if roots[0].sum() >= roots[1].sum() {
                states[0].clone()
            } else {
                states[1].clone()
            }
        }
        (true, false) => states[0].clone(),
        (false, true) => states[1].clone(),
        (false, false) => Err(KinematicsError::Ambiguous(roots[0].cast::<f64>().0, roots[1].cast::<f64>().0)),
    }
}

/// Singularity thresholds: `|det A| ≤ det_a` is parallel-singular,
/// `|ηᵢ| ≤ eta` is serial-singular for leg `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    pub det_a: T,
    pub eta: T,
}

impl<T: Real> Tolerances<T> {
    /// `1e-9·L³` on det A and `1e-9·L` on each ηᵢ.
    pub fn for_leg_length(leg_length: T) -> Self {
        let k = T::lit(1e-9);
        Self { det_a: k * leg_length * leg_length * leg_length, eta: k * leg_length }
    }
}

/// Jacobian matrices at one configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianSet<T> {
    /// Parallel Jacobian: rows `(cᵢ − bᵢ)ᵀ`.
    pub a: Mat3<T>,
    /// Serial Jacobian `diag(η)`.
    pub b: Mat3<T>,
    pub eta: [T; 3],
    /// Rows `(cᵢ − bᵢ)ᵀ / ηᵢ`; absent at a serial singularity.
    pub j_inv: Option<Mat3<T>>,
    /// `A⁻¹B`; absent at a parallel singularity.
    pub j: Option<Mat3<T>>,
    pub det_a: T,
    pub det_b: T,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> JacobianSet<T> {
    pub fn from_parts(a: Mat3<T>, eta: [T; 3], tolerances: Tolerances<T>) -> Self {
        let det_a = a.det();
        let det_b = eta[0] * eta[1] * eta[2];
        let b = Mat3::from_diagonal(eta);
        let j_inv = eta
            .iter()
            .all(|e| e.abs() > tolerances.eta)
            .then(|| Mat3::from_row_vectors([0, 1, 2].map(|i| a.row(i).scale(T::one() / eta[i]))));
        let j = if det_a.abs() > tolerances.det_a { a.solve(&b) } else { None };
        Self { a, b, eta, j_inv, j, det_a, det_b, tolerances }
    }

    /// Legs (0-based) with `|ηᵢ| ≤ ε_B`.
    pub fn serial_singular_legs(&self) -> Vec<usize> {
        (0..3).filter(|&i| !(self.eta[i].abs() > self.tolerances.eta)).collect()
    }

    pub fn is_parallel_singular(&self) -> bool {
        !(self.det_a.abs() > self.tolerances.det_a)
    }
}

pub fn jacobians<T: Real>(geom: &MachineGeometry<T>, state: &KinematicState<T>) -> JacobianSet<T> {
    jacobians_with(geom, state, Tolerances::for_leg_length(geom.leg_length))
}

pub fn jacobians_with<T: Real>(
    geom: &MachineGeometry<T>,
    state: &KinematicState<T>,
    tolerances: Tolerances<T>,
) -> JacobianSet<T> {
    let links = [0, 1, 2].map(|i| state.link(i));
    let eta = [0, 1, 2].map(|i| links[i].dot(&geom.legs[i].axis));
    JacobianSet::from_parts(Mat3::from_row_vectors(links), eta, tolerances)
}

/// `ṗ = J·ρ̇`.
pub fn velocity_map<T: Real>(jac: &JacobianSet<T>, rho_dot: Vec3<T>) -> Result<Vec3<T>, KinematicsError> {
    jac.j.map(|j| j.mul_vec(&rho_dot)).ok_or(KinematicsError::Unavailable("J"))
}

/// `ρ̇ = J⁻¹·ṗ`.
pub fn joint_rates<T: Real>(jac: &JacobianSet<T>, p_dot: Vec3<T>) -> Result<Vec3<T>, KinematicsError> {
    jac.j_inv.map(|m| m.mul_vec(&p_dot)).ok_or(KinematicsError::Unavailable("J⁻¹"))
}
