//! Geometric description of an Orthoglide instance.
//!
//! A machine has three identical legs. Leg `i` slides a carriage `Bᵢ` along
//! the line `aᵢ + ρᵢ·axisᵢ`; a rigid link of length `L` connects `Bᵢ` to the
//! platform point `Cᵢ = p + dᵢ`. The platform only translates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Position of the platform reference point P.
pub type CartesianPoint<T> = Vec3<T>;

/// One PRPaR leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegGeometry<T> {
    /// Foot point Aᵢ: the carriage position at ρᵢ = 0.
    pub anchor: Vec3<T>,
    /// Unit direction of prismatic travel.
    pub axis: Vec3<T>,
    /// Offset from P to the platform joint Cᵢ.
    pub platform_offset: Vec3<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRange<T> {
    pub min: T,
    pub max: T,
}

impl<T: Real> JointRange<T> {
    pub fn new(min: T, max: T) -> Self {
        Self { min, max }
    }

    /// An empty range (`min >= max`) contains nothing.
    pub fn contains(&self, rho: T) -> bool {
        self.min < self.max && rho >= self.min && rho <= self.max
    }
}

/// Actuated prismatic displacements (ρ₁, ρ₂, ρ₃).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JointVector<T> {
    pub rho: [T; 3],
}

impl<T: Real> JointVector<T> {
    pub fn new(rho: [T; 3]) -> Self {
        Self { rho }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().all(|r| r.is_finite())
    }

    pub fn within(&self, limits: &[JointRange<T>; 3]) -> bool {
        self.rho.iter().zip(limits).all(|(&r, lim)| lim.contains(r))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineGeometry<T> {
    pub name: Option<String>,
    pub leg_length: T,
    pub legs: [LegGeometry<T>; 3],
    pub joint_limits: [JointRange<T>; 3],
}

/// A broken geometry invariant. Legs are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    LegLength,
    NonFinite { field: String },
    AxisNotUnit { leg: usize },
    EmptyJointRange { leg: usize },
    NonOrthogonalAxes { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LegLength => write!(f, "leg_length: must be positive"),
            Violation::NonFinite { field } => write!(f, "{field}: non-finite value"),
            Violation::AxisNotUnit { leg } => write!(f, "leg {leg}: axis not unit"),
            Violation::EmptyJointRange { leg } => write!(f, "leg {leg}: empty joint range"),
            Violation::NonOrthogonalAxes { first, second } => {
                write!(f, "legs {first},{second}: axes not orthogonal (non-canonical)")
            }
        }
    }
}

/// Tolerance for the unit-axis and orthogonality checks, loosened to the
/// scalar's resolution for single precision.
fn unit_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// Builds the canonical machine: axes along x, y, z, anchors and platform
/// offsets at the origin, joint limits `[-2L, 2L]` on every leg.
///
/// With the default IK branch the isotropic configuration is `p = 0`,
/// `ρ = (-L, -L, -L)`.
pub fn canonical_orthoglide<T: Real>(leg_length: T) -> Result<MachineGeometry<T>, ModelError> {
    if !(leg_length > T::zero()) || !leg_length.is_finite() {
        return Err(ModelError::InvalidLegLength(leg_length.as_f64()));
    }
    let two_l = leg_length + leg_length;
    let leg = |k| LegGeometry { anchor: Vec3::zeros(), axis: Vec3::unit(k), platform_offset: Vec3::zeros() };
    Ok(MachineGeometry {
        name: Some("canonical".to_string()),
        leg_length,
        legs: [leg(0), leg(1), leg(2)],
        joint_limits: [JointRange::new(-two_l, two_l); 3],
    })
}

impl<T: Real> MachineGeometry<T> {
    /// Lists every violated invariant; empty when the geometry is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.leg_length.is_finite() {
            out.push(Violation::NonFinite { field: "leg_length".into() });
        } else if self.leg_length <= T::zero() {
            out.push(Violation::LegLength);
        }
        let tol = unit_tolerance::<T>();
        for (i, (leg, lim)) in self.legs.iter().zip(&self.joint_limits).enumerate() {
            let n = i + 1;
            for (field, v) in [("anchor", leg.anchor), ("axis", leg.axis), ("platform_offset", leg.platform_offset)] {
                if !v.is_finite() {
                    out.push(Violation::NonFinite { field: format!("leg {n}: {field}") });
                }
            }
            if leg.axis.is_finite() && (leg.axis.norm() - T::one()).abs() > tol {
                out.push(Violation::AxisNotUnit { leg: n });
            }
            if !lim.min.is_finite() || !lim.max.is_finite() {
                out.push(Violation::NonFinite { field: format!("leg {n}: joint_limits") });
            } else if lim.min >= lim.max {
                out.push(Violation::EmptyJointRange { leg: n });
            }
        }
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let d = self.legs[i].axis.dot(&self.legs[j].axis);
            if d.is_finite() && d.abs() > tol {
                out.push(Violation::NonOrthogonalAxes { first: i + 1, second: j + 1 });
            }
        }
        out
    }

    /// True when the three axes are unit length and pairwise orthogonal.
    pub fn has_orthogonal_axes(&self) -> bool {
        let tol = unit_tolerance::<T>();
        self.legs.iter().all(|l| (l.axis.norm() - T::one()).abs() <= tol)
            && [(0, 1), (1, 2), (0, 2)]
                .iter()
                .all(|&(i, j)| self.legs[i].axis.dot(&self.legs[j].axis).abs() <= tol)
    }

    /// Sign of the determinant of the matrix whose rows are the axes, or zero
    /// when they are coplanar. With every link along its axis, `det A` has
    /// this sign.
    pub fn axis_orientation(&self) -> T {
        let d = Mat3::from_row_vectors(self.legs.map(|l| l.axis)).det();
        if d > T::zero() {
            T::one()
        } else if d < T::zero() {
            -T::one()
        } else {
            T::zero()
        }
    }

    /// Platform position at which every link is collinear with its axis.
    ///
    /// Requires orthogonal axes. Each coordinate along axis `k` is fixed by
    /// the two legs `i ≠ k`; the two must agree within `1e-9·L`.
    pub fn isotropic_point(&self) -> Result<CartesianPoint<T>, ModelError> {
        if !self.has_orthogonal_axes() {
            return Err(ModelError::NoIsotropicPoint("axes are not orthogonal".into()));
        }
        let tol = T::lit(1e-9) * self.leg_length;
        let mut p = Vec3::zeros();
        for k in 0..3 {
            let axis_k = self.legs[k].axis;
            let along: Vec<T> = (0..3)
                .filter(|&i| i != k)
                .map(|i| (self.legs[i].anchor - self.legs[i].platform_offset).dot(&axis_k))
                .collect();
            if (along[0] - along[1]).abs() > tol {
                return Err(ModelError::NoIsotropicPoint(format!(
                    "legs disagree on the coordinate along axis {}",
                    k + 1
                )));
            }
            p += axis_k.scale((along[0] + along[1]) / T::lit(2.0));
        }
        Ok(p)
    }

    /// Uniformly scales every length in the description by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            name: self.name.clone(),
            leg_length: self.leg_length * s,
            legs: self.legs.map(|l| LegGeometry {
                anchor: l.anchor.scale(s),
                axis: l.axis,
                platform_offset: l.platform_offset.scale(s),
            }),
            joint_limits: self.joint_limits.map(|r| JointRange::new(r.min * s, r.max * s)),
        }
    }

    pub fn with_joint_limits(&self, joint_limits: [JointRange<T>; 3]) -> Self {
        Self { joint_limits, ..self.clone() }
    }

    pub fn cast<U: Real>(&self) -> MachineGeometry<U> {
        MachineGeometry {
            name: self.name.clone(),
            leg_length: U::lit(self.leg_length.as_f64()),
            legs: self.legs.map(|l| LegGeometry {
                anchor: l.anchor.cast(),
                axis: l.axis.cast(),
                platform_offset: l.platform_offset.cast(),
            }),
            joint_limits: self
                .joint_limits
                .map(|r| JointRange::new(U::lit(r.min.as_f64()), U::lit(r.max.as_f64()))),
        }
    }
}
