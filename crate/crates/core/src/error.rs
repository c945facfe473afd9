use thiserror::Error;

/// Errors from constructing or loading a machine description.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("leg length must be positive and finite, got {0}")]
    InvalidLegLength(f64),
    #[error("geometry has no isotropic point: {0}")]
    NoIsotropicPoint(String),
}

/// Model-file parse failure with the 1-based location when it is known.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", location.map(|(l, c)| format!("line {l}, column {c}: ")).unwrap_or_default())]
pub struct ParseError {
    pub message: String,
    pub location: Option<(usize, usize)>,
}

impl ParseError {
    pub(crate) fn new(message: impl Into<String>) -> Self {
        Self { message: message.into(), location: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    /// One entry per leg that cannot reach: (1-based leg, squared distance to the travel line).
    #[error("{}", describe_unreachable(.0))]
    Unreachable(Vec<(usize, f64)>),
    #[error("no assembly: the three leg spheres have no common point")]
    NoAssembly,
    #[error("ambiguous assembly: neither candidate {0:?} nor {1:?} is admissible")]
    Ambiguous([f64; 3], [f64; 3]),
    #[error("leg centres are collinear: the assembly is not isolated")]
    DegenerateAssembly,
    #[error("configuration does not close: link length error {0}")]
    NotClosed(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("{0} unavailable at a singular configuration")]
    Unavailable(&'static str),
}

fn describe_unreachable(legs: &[(usize, f64)]) -> String {
    legs.iter()
        .map(|(leg, w)| format!("leg {leg} unreachable (perpendicular distance² {w} exceeds L²)"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("{0} unavailable at a singular configuration")]
    Unavailable(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error("{0}")]
    Domain(String),
    #[error("unknown quantity '{0}' (expected kappa, psi_max, psi_min, det_A, det_B or eta_min)")]
    UnknownQuantity(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("{0}")]
    Domain(String),
    #[error("sizing requires mutually orthogonal unit prismatic axes")]
    Unsupported,
    #[error("amplification bounds are violated arbitrarily close to the isotropic point")]
    Infeasible,
    #[error(transparent)]
    Model(#[from] ModelError),
}
