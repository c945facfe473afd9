//! Joint-limit sizing from a velocity-amplification bound.
//!
//! The certified region is a cube centred at the isotropic point. Its
//! half-side is found by bisection; each candidate is checked on a grid for
//! reachability and `lo ≤ ψᵢ ≤ hi`. Joint limits are the range of ρ over the
//! certified grid, widened by one grid step.

use rayon::prelude::*;

use crate::error::DesignError;
use crate::kinematics::{inverse_kinematics, jacobians, DEFAULT_BRANCHES};
use crate::linalg::{svd, Vec3};
use crate::model::{JointRange, MachineGeometry};
use crate::scalar::Real;
use crate::workspace::Cube;

#[derive(Clone, Debug, PartialEq)]
pub struct DesignResult<T> {
    pub joint_limits: [JointRange<T>; 3],
    pub certified_cube: Cube<T>,
    pub psi_bounds: (T, T),
    pub grid_resolution: usize,
    /// (smallest ψ, largest ψ) seen on the certification grid.
    pub psi_extremes: (T, T),
    pub volume_ratio: T,
}

/// Outcome of checking one cube on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeCheck<T> {
    pub passed: bool,
    pub psi_min: T,
    pub psi_max: T,
    pub rho_min: [T; 3],
    pub rho_max: [T; 3],
}

#[derive(Clone, Copy)]
struct PointSample<T> {
    ok: bool,
    psi: (T, T),
    rho: [T; 3],
}

fn sample<T: Real>(geom: &MachineGeometry<T>, p: Vec3<T>, bounds: (T, T)) -> PointSample<T> {
    let failed = PointSample { ok: false, psi: (T::infinity(), T::neg_infinity()), rho: [T::nan(); 3] };
    let Ok(state) = inverse_kinematics(geom, p, DEFAULT_BRANCHES) else {
        return failed;
    };
    let Some(j) = jacobians(geom, &state).j else {
        return PointSample { rho: state.rho().rho, ..failed };
    };
    let s = svd(&j).sigma;
    PointSample {
        ok: s[2] >= bounds.0 && s[0] <= bounds.1,
        psi: (s[2], s[0]),
        rho: state.rho().rho,
    }
}

/// Checks every point of an inclusive `n³` grid over `cube`.
pub fn verify_cube<T: Real>(geom: &MachineGeometry<T>, cube: &Cube<T>, bounds: (T, T), n: usize) -> CubeCheck<T> {
    let init = || CubeCheck {
        passed: true,
        psi_min: T::infinity(),
        psi_max: T::neg_infinity(),
        rho_min: [T::infinity(); 3],
        rho_max: [T::neg_infinity(); 3],
    };
    cube.grid(n)
        .into_par_iter()
        .map(|p| {
            let s = sample(geom, p, bounds);
            let mut c = init();
            c.passed = s.ok;
            c.psi_min = s.psi.0;
            c.psi_max = s.psi.1;
            if s.ok {
                c.rho_min = s.rho;
                c.rho_max = s.rho;
            }
            c
        })
        .reduce(init, |a, b| CubeCheck {
            passed: a.passed && b.passed,
            psi_min: a.psi_min.min(b.psi_min),
            psi_max: a.psi_max.max(b.psi_max),
            rho_min: [0, 1, 2].map(|i| a.rho_min[i].min(b.rho_min[i])),
            rho_max: [0, 1, 2].map(|i| a.rho_max[i].max(b.rho_max[i])),
        })
}

/// Largest certified cube and the joint limits it needs.
pub fn size_joint_limits<T: Real>(
    geom: &MachineGeometry<T>,
    psi_bounds: (T, T),
    grid_resolution: usize,
) -> Result<DesignResult<T>, DesignError> {
    let (lo, hi) = psi_bounds;
    if !(T::zero() < lo && lo < T::one() && T::one() < hi) || !hi.is_finite() {
        return Err(DesignError::Domain(format!("psi bounds must satisfy 0 < lo < 1 < hi, got ({lo}, {hi})")));
    }
    if !(2..=512).contains(&grid_resolution) {
        return Err(DesignError::Domain(format!("grid resolution must be in [2, 512], got {grid_resolution}")));
    }
    if !geom.has_orthogonal_axes() {
        return Err(DesignError::Unsupported);
    }
    let center = geom.isotropic_point()?;
    let l = geom.leg_length;
    let tol = T::lit(1e-4) * l;
    let passes = |s: T| verify_cube(geom, &Cube::new(center, s), psi_bounds, grid_resolution).passed;

    if !passes(tol) {
        return Err(DesignError::Infeasible);
    }
    let mut good = tol;
    let mut bad = l;
    while passes(bad) {
        good = bad;
        bad = bad + bad;
        if bad > T::lit(1e6) * l {
            return Err(DesignError::Domain("amplification bound never fails; bounds too loose".into()));
        }
    }
    while bad - good > tol {
        let mid = (good + bad) / T::lit(2.0);
        if passes(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }

    let cube = Cube::new(center, good);
    let check = verify_cube(geom, &cube, psi_bounds, grid_resolution);
    let step = (good + good) / T::lit((grid_resolution - 1) as f64);
    let joint_limits = [0, 1, 2].map(|i| JointRange::new(check.rho_min[i] - step, check.rho_max[i] + step));
    let mut result = DesignResult {
        joint_limits,
        certified_cube: cube,
        psi_bounds,
        grid_resolution,
        psi_extremes: (check.psi_min, check.psi_max),
        volume_ratio: T::zero(),
    };
    result.volume_ratio = size_metrics(geom, &result).volume_ratio;
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeMetrics<T> {
    pub certified_volume: T,
    pub bounding_min: Vec3<T>,
    pub bounding_max: Vec3<T>,
    pub bounding_volume: T,
    pub volume_ratio: T,
}

/// Certified cube volume over the volume of the machine's bounding box:
/// the hull of the anchors, the travel segments at the sized limits and
/// the certified cube inflated by `L`.
pub fn size_metrics<T: Real>(geom: &MachineGeometry<T>, result: &DesignResult<T>) -> SizeMetrics<T> {
    let mut lo = Vec3([T::infinity(); 3]);
    let mut hi = Vec3([T::neg_infinity(); 3]);
    let mut include = |p: Vec3<T>| {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    };
    for (leg, lim) in geom.legs.iter().zip(&result.joint_limits) {
        include(leg.anchor);
        include(leg.anchor + leg.axis.scale(lim.min));
        include(leg.anchor + leg.axis.scale(lim.max));
    }
    let reach = result.certified_cube.half_side + geom.leg_length;
    let c = result.certified_cube.center;
    include(c + Vec3([reach; 3]));
    include(c - Vec3([reach; 3]));
    let extent = hi - lo;
    let bounding_volume = extent[0] * extent[1] * extent[2];
    let certified_volume = result.certified_cube.volume();
    SizeMetrics {
        certified_volume,
        bounding_min: lo,
        bounding_max: hi,
        bounding_volume,
        volume_ratio: certified_volume / bounding_volume,
    }
}
