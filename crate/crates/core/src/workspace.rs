//! Cartesian workspace: point feasibility, octree decomposition, sections,
//! scalar fields and connectivity.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{condition_number, ConditionVariant};
use crate::error::WorkspaceError;
use crate::kinematics::{inverse_kinematics, jacobians, JacobianSet, KinematicState, DEFAULT_BRANCHES};
use crate::linalg::{svd, Vec3};
use crate::model::{CartesianPoint, MachineGeometry};
use crate::scalar::Real;
use crate::error::KinematicsError;

/// Axis-aligned cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cube<T> {
    pub center: Vec3<T>,
    pub half_side: T,
}

impl<T: Real> Cube<T> {
    pub fn new(center: Vec3<T>, half_side: T) -> Self {
        Self { center, half_side }
    }

    pub fn volume(&self) -> T {
        let side = self.half_side + self.half_side;
        side * side * side
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        (0..3).all(|k| (p[k] - self.center[k]).abs() <= self.half_side)
    }

    /// `n` evenly spaced points per axis including both faces.
    pub fn grid(&self, n: usize) -> Vec<Vec3<T>> {
        let coords = |k: usize| linspace(self.center[k] - self.half_side, self.center[k] + self.half_side, n);
        let (xs, ys, zs) = (coords(0), coords(1), coords(2));
        let mut out = Vec::with_capacity(n * n * n);
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(Vec3::new(x, y, z));
                }
            }
        }
        out
    }

    /// Corners, centre and face centres.
    fn samples(&self) -> [Vec3<T>; 15] {
        let h = self.half_side;
        let c = self.center;
        let mut out = [c; 15];
        let mut n = 0;
        for sx in [-h, h] {
            for sy in [-h, h] {
                for sz in [-h, h] {
                    out[n] = c + Vec3::new(sx, sy, sz);
                    n += 1;
                }
            }
        }
        n += 1; // centre stays at index 8
        for k in 0..3 {
            for s in [-h, h] {
                let mut p = c;
                p[k] = p[k] + s;
                out[n] = p;
                n += 1;
            }
        }
        out
    }

    fn overlaps(&self, other: &Self) -> bool {
        let slack = T::lit(1e-9) * self.half_side.min(other.half_side);
        (0..3).all(|k| (self.center[k] - other.center[k]).abs() < self.half_side + other.half_side - slack)
    }

    fn child(&self, index: usize) -> Self {
        let q = self.half_side / T::lit(2.0);
        let offset = Vec3::new(
            if index & 1 == 0 { -q } else { q },
            if index & 2 == 0 { -q } else { q },
            if index & 4 == 0 { -q } else { q },
        );
        Self::new(self.center + offset, q)
    }
}

fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![(lo + hi) / T::lit(2.0)];
    }
    let last = T::lit((n - 1) as f64);
    (0..n).map(|i| lo + (hi - lo) * T::lit(i as f64) / last).collect()
}

/// A set of platform positions the octree can decompose.
pub trait Region<T: Real>: Sync {
    fn contains(&self, p: &CartesianPoint<T>) -> bool;

    /// True only when no point within `radius` of `center` can belong to
    /// the region.
    fn excludes_ball(&self, _center: &CartesianPoint<T>, _radius: T) -> bool {
        false
    }
}

/// Feasibility requirements for a platform position.
///
/// A position is always required to be reachable on the default IK branch
/// and to lie in the working assembly mode, where `det A` has the sign of
/// the axis frame's determinant. Every other check is configurable.
#[derive(Clone, Debug, PartialEq)]
pub struct PointPredicate<T> {
    pub geom: MachineGeometry<T>,
    pub require_joint_limits: bool,
    /// Allowed range of every velocity amplification factor.
    pub psi_bounds: Option<(T, T)>,
    /// Serial-singularity margin on `min |ηᵢ|`.
    pub min_eta: T,
    /// Parallel-singularity margin on `|det A|`.
    pub min_det_a: T,
}

impl<T: Real> PointPredicate<T> {
    /// Joint limits on, `1/3 ≤ ψᵢ ≤ 3`, margins `1e-6·L` and `1e-6·L³`.
    pub fn new(geom: MachineGeometry<T>) -> Self {
        let l = geom.leg_length;
        let margin = T::lit(1e-6);
        Self {
            require_joint_limits: true,
            psi_bounds: Some((T::one() / T::lit(3.0), T::lit(3.0))),
            min_eta: margin * l,
            min_det_a: margin * l * l * l,
            geom,
        }
    }

    pub fn check(&self) -> Result<(), WorkspaceError> {
        if let Some((lo, hi)) = self.psi_bounds {
            if !(lo < hi) {
                return Err(WorkspaceError::Domain(format!("psi bounds must satisfy lo < hi, got ({lo}, {hi})")));
            }
        }
        if !(self.min_eta >= T::zero()) || !(self.min_det_a >= T::zero()) {
            return Err(WorkspaceError::Domain("singularity margins must be non-negative".into()));
        }
        Ok(())
    }

    /// Distance bound: leg `i` can only place `p + dᵢ` within `L` of its
    /// travel segment (or line, when joint limits are not enforced).
    fn leg_excludes(&self, i: usize, center: &CartesianPoint<T>, radius: T) -> bool {
        let leg = &self.geom.legs[i];
        let rel = *center + leg.platform_offset - leg.anchor;
        let along = rel.dot(&leg.axis);
        let t = if self.require_joint_limits {
            let lim = self.geom.joint_limits[i];
            if !(lim.min < lim.max) {
                return true;
            }
            along.max(lim.min).min(lim.max)
        } else {
            along
        };
        (rel - leg.axis.scale(t)).norm() > self.geom.leg_length + radius
    }
}

impl<T: Real> Region<T> for PointPredicate<T> {
    fn contains(&self, p: &CartesianPoint<T>) -> bool {
        evaluate_point(self, *p).feasible
    }

    fn excludes_ball(&self, center: &CartesianPoint<T>, radius: T) -> bool {
        (0..3).any(|i| self.leg_excludes(i, center, radius))
    }
}

/// Why a point is infeasible. Legs are numbered from 1.
#[derive(Clone, Debug, PartialEq)]
pub enum Infeasibility {
    Unreachable(Vec<usize>),
    JointLimits(Vec<usize>),
    SerialMargin,
    ParallelMargin,
    /// det A has the opposite sign to the axis frame: the platform is on the
    /// far side of a parallel singularity from the isotropic configuration.
    AssemblyMode,
    Amplification,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let legs = |l: &[usize]| l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Infeasibility::Unreachable(l) => write!(f, "unreachable (legs {})", legs(l)),
            Infeasibility::JointLimits(l) => write!(f, "joint limits (legs {})", legs(l)),
            Infeasibility::SerialMargin => write!(f, "serial margin"),
            Infeasibility::ParallelMargin => write!(f, "parallel margin"),
            Infeasibility::AssemblyMode => write!(f, "assembly mode"),
            Infeasibility::Amplification => write!(f, "amplification bounds"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointEvaluation<T> {
    pub feasible: bool,
    pub reasons: Vec<Infeasibility>,
    /// Singular values of J when it exists.
    pub psi: Option<[T; 3]>,
}

pub fn evaluate_point<T: Real>(pred: &PointPredicate<T>, p: CartesianPoint<T>) -> PointEvaluation<T> {
    let state = match inverse_kinematics(&pred.geom, p, DEFAULT_BRANCHES) {
        Ok(s) => s,
        Err(KinematicsError::Unreachable(legs)) => {
            let legs = legs.into_iter().map(|(l, _)| l).collect();
            return PointEvaluation { feasible: false, reasons: vec![Infeasibility::Unreachable(legs)], psi: None };
        }
        Err(_) => {
            return PointEvaluation { feasible: false, reasons: vec![Infeasibility::Unreachable(vec![])], psi: None };
        }
    };
    let mut reasons = Vec::new();
    if pred.require_joint_limits {
        let out: Vec<usize> = (0..3)
            .filter(|&i| !pred.geom.joint_limits[i].contains(state.rho().rho[i]))
            .map(|i| i + 1)
            .collect();
        if !out.is_empty() {
            reasons.push(Infeasibility::JointLimits(out));
        }
    }
    let jac = jacobians(&pred.geom, &state);
    if jac.eta.iter().any(|e| !(e.abs() >= pred.min_eta)) {
        reasons.push(Infeasibility::SerialMargin);
    }
    if !(jac.det_a.abs() >= pred.min_det_a) {
        reasons.push(Infeasibility::ParallelMargin);
    } else if jac.det_a * pred.geom.axis_orientation() < T::zero() {
        reasons.push(Infeasibility::AssemblyMode);
    }
    let psi = jac.j.map(|j| svd(&j).sigma);
    if let Some((lo, hi)) = pred.psi_bounds {
        let ok = psi.is_some_and(|s| s.iter().all(|&v| v >= lo && v <= hi));
        if !ok {
            reasons.push(Infeasibility::Amplification);
        }
    }
    PointEvaluation { feasible: reasons.is_empty(), reasons, psi }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellLabel {
    Inside,
    Outside,
    Boundary,
}

impl CellLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CellLabel::Inside => "inside",
            CellLabel::Outside => "outside",
            CellLabel::Boundary => "boundary",
        }
    }
}

/// Octree node. Subdivided nodes keep the `Boundary` label and point at
/// their eight children; leaves carry the final classification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell<T> {
    pub cube: Cube<T>,
    pub depth: u32,
    pub label: CellLabel,
    /// Index of the first of eight consecutive children.
    pub children: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OctreeWorkspace<T> {
    pub root_box: Cube<T>,
    pub max_depth: u32,
    pub cells: Vec<Cell<T>>,
    /// Total volume of inside leaves.
    pub volume_lower: T,
    /// Inside plus boundary leaves.
    pub volume_upper: T,
}

impl<T: Real> OctreeWorkspace<T> {
    pub fn leaves(&self) -> impl Iterator<Item = &Cell<T>> {
        self.cells.iter().filter(|c| c.children.is_none())
    }

    /// Leaves overlapping `query` with positive volume.
    fn overlapping_leaves(&self, query: &Cube<T>, out: &mut Vec<usize>) {
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let cell = &self.cells[i];
            if !cell.cube.overlaps(query) {
                continue;
            }
            match cell.children {
                Some(first) => stack.extend(first..first + 8),
                None => out.push(i),
            }
        }
    }

    /// Half-side of the largest cube centred at `center`, in steps of the
    /// finest cell size, that is covered by inside leaves only.
    pub fn inscribed_cube(&self, center: CartesianPoint<T>) -> T {
        let step = self.root_box.half_side / T::lit((1u64 << self.max_depth) as f64);
        let mut best = T::zero();
        let mut buf = Vec::new();
        for k in 1..=(1usize << self.max_depth) {
            let s = step * T::lit(k as f64);
            let probe = Cube::new(center, s);
            if !(0..3).all(|a| (center[a] - self.root_box.center[a]).abs() + s <= self.root_box.half_side) {
                break;
            }
            buf.clear();
            self.overlapping_leaves(&probe, &mut buf);
            if buf.iter().any(|&i| self.cells[i].label != CellLabel::Inside) {
                break;
            }
            best = s;
        }
        best
    }
}

enum Decision {
    Inside,
    Outside,
    Boundary,
    Subdivide,
}

fn decide<T: Real, R: Region<T>>(region: &R, cube: &Cube<T>, depth: u32, max_depth: u32) -> Decision {
    let samples = cube.samples();
    let feasible = samples.iter().filter(|p| region.contains(p)).count();
    if feasible == samples.len() && depth >= 2 {
        return Decision::Inside;
    }
    if feasible == 0 {
        let diagonal = cube.half_side * T::lit(3.0).sqrt();
        if depth == max_depth || region.excludes_ball(&cube.center, diagonal) {
            return Decision::Outside;
        }
    }
    if depth == max_depth {
        Decision::Boundary
    } else {
        Decision::Subdivide
    }
}

/// Decomposes `root_box` level by level. A cell is inside when all 15 of
/// its samples are feasible (from depth 2 on), outside when none is and
/// either the region excludes the cell's circumscribed ball or the maximum
/// depth is reached, and otherwise split; mixed cells at the maximum depth
/// are boundary cells.
pub fn compute_octree<T: Real, R: Region<T>>(
    region: &R,
    root_box: Cube<T>,
    max_depth: u32,
) -> Result<OctreeWorkspace<T>, WorkspaceError> {
    if !(1..=12).contains(&max_depth) {
        return Err(WorkspaceError::Domain(format!("max_depth must be in [1, 12], got {max_depth}")));
    }
    if !(root_box.half_side > T::zero()) || !root_box.half_side.is_finite() || !root_box.center.is_finite() {
        return Err(WorkspaceError::Domain("root box must have positive finite size".into()));
    }
    let mut cells = vec![Cell { cube: root_box, depth: 0, label: CellLabel::Boundary, children: None }];
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let decisions: Vec<Decision> = frontier
            .par_iter()
            .map(|&i| decide(region, &cells[i].cube, cells[i].depth, max_depth))
            .collect();
        let mut next = Vec::new();
        for (&i, decision) in frontier.iter().zip(decisions) {
            match decision {
                Decision::Inside => cells[i].label = CellLabel::Inside,
                Decision::Outside => cells[i].label = CellLabel::Outside,
                Decision::Boundary => cells[i].label = CellLabel::Boundary,
                Decision::Subdivide => {
                    let first = cells.len();
                    let parent = cells[i];
                    for k in 0..8 {
                        cells.push(Cell {
                            cube: parent.cube.child(k),
                            depth: parent.depth + 1,
                            label: CellLabel::Boundary,
                            children: None,
                        });
                        next.push(first + k);
                    }
                    cells[i].children = Some(first);
                }
            }
        }
        frontier = next;
    }
    let mut volume_lower = T::zero();
    let mut boundary = T::zero();
    for c in cells.iter().filter(|c| c.children.is_none()) {
        match c.label {
            CellLabel::Inside => volume_lower = volume_lower + c.cube.volume(),
            CellLabel::Boundary => boundary = boundary + c.cube.volume(),
            CellLabel::Outside => {}
        }
    }
    Ok(OctreeWorkspace { root_box, max_depth, cells, volume_lower, volume_upper: volume_lower + boundary })
}

/// Face-connectivity of the inside leaves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connectivity<T> {
    pub connected: bool,
    pub component_count: usize,
    pub largest_component_volume: T,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Counts 6-connected components of inside leaves. Two leaves are
/// neighbours when they share part of a face. An empty workspace has zero
/// components and is reported as not connected.
pub fn t_connected<T: Real>(octree: &OctreeWorkspace<T>) -> Connectivity<T> {
    let inside: Vec<usize> = (0..octree.cells.len())
        .filter(|&i| octree.cells[i].children.is_none() && octree.cells[i].label == CellLabel::Inside)
        .collect();
    let slot: BTreeMap<usize, usize> = inside.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut parent: Vec<usize> = (0..inside.len()).collect();
    let mut buf = Vec::new();
    for (k, &i) in inside.iter().enumerate() {
        let cube = octree.cells[i].cube;
        for axis in 0..3 {
            // Positive direction only; the negative side is seen from the neighbour.
            let mut across = cube;
            across.center[axis] = across.center[axis] + cube.half_side + cube.half_side;
            buf.clear();
            octree.overlapping_leaves(&across, &mut buf);
            for j in &buf {
                if let Some(&m) = slot.get(j) {
                    let (a, b) = (find(&mut parent, k), find(&mut parent, m));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut volumes: BTreeMap<usize, T> = BTreeMap::new();
    for (k, &i) in inside.iter().enumerate() {
        let root = find(&mut parent, k);
        let v = volumes.entry(root).or_insert(T::zero());
        *v = *v + octree.cells[i].cube.volume();
    }
    let component_count = volumes.len();
    Connectivity {
        connected: component_count == 1,
        component_count,
        largest_component_volume: volumes.values().fold(T::zero(), |m, &v| m.max(v)),
    }
}

/// Feasibility on a square grid of pixel centres in the plane
/// `x[axis] = offset`, spanning the root box.
#[derive(Clone, Debug, PartialEq)]
pub struct Section<T> {
    pub axis: usize,
    pub offset: T,
    /// In-plane axes in increasing order.
    pub plane_axes: (usize, usize),
    pub resolution: usize,
    pub origin: (T, T),
    pub pixel: T,
    /// Row-major: index `iu * resolution + iv`.
    pub feasible: Vec<bool>,
}

impl<T: Real> Section<T> {
    pub fn point(&self, iu: usize, iv: usize) -> CartesianPoint<T> {
        let half = self.pixel / T::lit(2.0);
        let mut p = Vec3::zeros();
        p[self.axis] = self.offset;
        p[self.plane_axes.0] = self.origin.0 + self.pixel * T::lit(iu as f64) + half;
        p[self.plane_axes.1] = self.origin.1 + self.pixel * T::lit(iv as f64) + half;
        p
    }

    pub fn get(&self, iu: usize, iv: usize) -> bool {
        self.feasible[iu * self.resolution + iv]
    }

    pub fn area(&self) -> T {
        let count = self.feasible.iter().filter(|&&f| f).count();
        T::lit(count as f64) * self.pixel * self.pixel
    }
}

pub fn cross_section<T: Real, R: Region<T>>(
    region: &R,
    root_box: &Cube<T>,
    axis: usize,
    offset: T,
    resolution: usize,
) -> Result<Section<T>, WorkspaceError> {
    if axis > 2 {
        return Err(WorkspaceError::Domain(format!("plane axis must be 0, 1 or 2, got {axis}")));
    }
    if !(8..=4096).contains(&resolution) {
        return Err(WorkspaceError::Domain(format!("resolution must be in [8, 4096], got {resolution}")));
    }
    if !((offset - root_box.center[axis]).abs() <= root_box.half_side) {
        return Err(WorkspaceError::Domain("section plane lies outside the root box".into()));
    }
    let plane_axes = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut section = Section {
        axis,
        offset,
        plane_axes,
        resolution,
        origin: (
            root_box.center[plane_axes.0] - root_box.half_side,
            root_box.center[plane_axes.1] - root_box.half_side,
        ),
        pixel: (root_box.half_side + root_box.half_side) / T::lit(resolution as f64),
        feasible: Vec::new(),
    };
    section.feasible = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| region.contains(&section.point(k / resolution, k % resolution)))
        .collect();
    Ok(section)
}

/// Per-point quantity for field maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// Rooted condition number of J⁻¹.
    Kappa,
    PsiMax,
    PsiMin,
    DetA,
    DetB,
    /// Smallest ηᵢ.
    EtaMin,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Kappa => "kappa",
            Quantity::PsiMax => "psi_max",
            Quantity::PsiMin => "psi_min",
            Quantity::DetA => "det_A",
            Quantity::DetB => "det_B",
            Quantity::EtaMin => "eta_min",
        }
    }

    fn of<T: Real>(self, jac: &JacobianSet<T>) -> Option<T> {
        match self {
            Quantity::Kappa => jac.j_inv.and_then(|m| condition_number(&m, ConditionVariant::Rooted).ok()),
            Quantity::PsiMax => jac.j.map(|j| svd(&j).sigma[0]),
            Quantity::PsiMin => jac.j.map(|j| svd(&j).sigma[2]),
            Quantity::DetA => Some(jac.det_a),
            Quantity::DetB => Some(jac.det_b),
            Quantity::EtaMin => Some(jac.eta[0].min(jac.eta[1]).min(jac.eta[2])),
        }
    }
}

impl FromStr for Quantity {
    type Err = WorkspaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "kappa" => Quantity::Kappa,
            "psi_max" => Quantity::PsiMax,
            "psi_min" => Quantity::PsiMin,
            "det_A" | "det_a" => Quantity::DetA,
            "det_B" | "det_b" => Quantity::DetB,
            "eta_min" => Quantity::EtaMin,
            other => return Err(WorkspaceError::UnknownQuantity(other.to_string())),
        })
    }
}

/// Sampled field. `values[k]` is NaN where the quantity cannot be computed
/// (unreachable point or missing matrix); `feasible[k]` is the predicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    pub quantity: Quantity,
    pub points: Vec<CartesianPoint<T>>,
    pub values: Vec<T>,
    pub feasible: Vec<bool>,
}

impl<T: Real> ScalarField<T> {
    /// Extremes over feasible points with a finite value.
    pub fn feasible_range(&self) -> Option<(T, T)> {
        self.values
            .iter()
            .zip(&self.feasible)
            .filter(|(v, f)| **f && v.is_finite())
            .map(|(v, _)| *v)
            .fold(None, |acc, v| Some(acc.map_or((v, v), |(lo, hi): (T, T)| (lo.min(v), hi.max(v)))))
    }
}

/// Samples `quantity` on an inclusive `resolution³` grid over `cube`.
pub fn scalar_field<T: Real>(
    pred: &PointPredicate<T>,
    quantity: Quantity,
    cube: &Cube<T>,
    resolution: usize,
) -> Result<ScalarField<T>, WorkspaceError> {
    if !(2..=1024).contains(&resolution) {
        return Err(WorkspaceError::Domain(format!("grid resolution must be in [2, 1024], got {resolution}")));
    }
    if !(cube.half_side >= T::zero()) || !cube.center.is_finite() {
        return Err(WorkspaceError::Domain("grid cube must have non-negative finite size".into()));
    }
    let points = cube.grid(resolution);
    let (values, feasible): (Vec<T>, Vec<bool>) = points
        .par_iter()
        .map(|p| {
            let value = inverse_kinematics(&pred.geom, *p, DEFAULT_BRANCHES)
                .ok()
                .and_then(|s: KinematicState<T>| quantity.of(&jacobians(&pred.geom, &s)))
                .unwrap_or(T::nan());
            (value, evaluate_point(pred, *p).feasible)
        })
        .unzip();
    Ok(ScalarField { quantity, points, values, feasible })
}
