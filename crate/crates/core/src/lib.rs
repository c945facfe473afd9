//! Kinematic model and performance analysis of the Orthoglide, a 3-axis
//! translational parallel machine with three orthogonal prismatic
//! actuators and fixed-length parallelogram legs.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the CLI and model files use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod design;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod workspace;

pub use analysis::{
    analyze, classify_singularity, condition_number, isotropy_check, manipulability, AnalysisReport, Classification,
    ConditionVariant, ParallelKind,
};
pub use design::{size_joint_limits, size_metrics, DesignResult};
pub use error::{AnalysisError, DesignError, KinematicsError, ModelError, ParseError, WorkspaceError};
pub use kinematics::{
    forward_kinematics, inverse_kinematics, jacobians, joint_rates, velocity_map, Branch, JacobianSet,
    KinematicState, Tolerances, DEFAULT_BRANCHES,
};
pub use linalg::{Mat3, Vec3};
pub use model::{canonical_orthoglide, CartesianPoint, JointRange, JointVector, MachineGeometry};
pub use scalar::Real;
pub use workspace::{compute_octree, cross_section, evaluate_point, scalar_field, t_connected, Cube, PointPredicate};

pub type Vector3 = Vec3<f64>;
pub type Matrix3 = Mat3<f64>;
pub type Geometry = MachineGeometry<f64>;
pub type State = KinematicState<f64>;
pub type Jacobians = JacobianSet<f64>;
pub type Report = AnalysisReport<f64>;
pub type Predicate = PointPredicate<f64>;
pub type Octree = workspace::OctreeWorkspace<f64>;
pub type Design = DesignResult<f64>;

pub type Geometry32 = MachineGeometry<f32>;
pub type State32 = KinematicState<f32>;
