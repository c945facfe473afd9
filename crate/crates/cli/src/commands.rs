use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use orthoglide::analysis::{analyze, isotropy_check};
use orthoglide::io::{load_design, save_design};
use orthoglide::workspace::{
    compute_octree, cross_section, scalar_field, t_connected, CellLabel, OctreeWorkspace, Quantity,
};
use orthoglide::{
    canonical_orthoglide, forward_kinematics, inverse_kinematics, size_joint_limits, Branch, Cube, Design, Geometry,
    JointVector, KinematicsError, Predicate, State, Vector3,
};

use crate::number::{fmt as num, vec3};
use crate::output::write_atomic;
use crate::{Cli, Command, Format, PredicateArgs, RegionArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Kinematic(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Kinematic(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Kinematic(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        CliError::Kinematic(e.to_string())
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

struct Model {
    source: String,
    geom: Geometry,
    design: Option<Design>,
}

fn load_model(path: Option<&Path>) -> Result<Model, CliError> {
    let Some(path) = path else {
        return Ok(Model { source: "canonical".into(), geom: canonical_orthoglide(1.0).map_err(usage)?, design: None });
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (geom, design) = load_design(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Model { source: path.display().to_string(), geom, design })
}

fn emit(cli: &Cli, contents: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => write_atomic(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Deterministic one-line record of the run, on standard error.
fn announce(command: &str, model: &Model, params: &[(&str, String)]) {
    let mut line = format!(
        "orthoglide {} {command} model={} L={}",
        env!("CARGO_PKG_VERSION"),
        model.source,
        num(model.geom.leg_length)
    );
    for (k, v) in params {
        let _ = write!(line, " {k}={v}");
    }
    eprintln!("{line}");
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)?;
    }
    let model = load_model(cli.model.as_deref())?;
    match &cli.command {
        Command::Validate => validate(cli, &model),
        Command::Ik { point, branch } => ik(cli, &model, *point, branch),
        Command::Fk { rho, hint } => fk(cli, &model, *rho, *hint),
        Command::Analyze { point, tol } => analyze_point(cli, &model, *point, *tol),
        Command::Map { quantity, grid, region, predicate } => map(cli, &model, quantity, *grid, region, predicate),
        Command::Workspace { depth, summary, region, predicate } => {
            workspace(cli, &model, *depth, summary.as_deref(), region, predicate)
        }
        Command::Section { axis, offset, resolution, region, predicate } => {
            section(cli, &model, axis, *offset, *resolution, region, predicate)
        }
        Command::Design { psi, grid } => design(cli, &model, *psi, *grid),
    }
}

fn require_valid(model: &Model) -> Result<(), CliError> {
    let violations = model.geom.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(CliError::Usage(format!("invalid model: {}", list.join("; "))))
    }
}

fn validate(cli: &Cli, model: &Model) -> Result<(), CliError> {
    announce("validate", model, &[]);
    let violations = model.geom.validate();
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", model.source);
    let _ = writeln!(out, "leg_length: {}", num(model.geom.leg_length));
    let _ = writeln!(out, "orthogonal_axes: {}", model.geom.has_orthogonal_axes());
    match model.geom.isotropic_point() {
        Ok(p) => {
            let _ = writeln!(out, "isotropic_point: {}", vec3(p.0));
        }
        Err(e) => {
            let _ = writeln!(out, "isotropic_point: none ({e})");
        }
    }
    let _ = writeln!(out, "has_design_result: {}", model.design.is_some());
    let _ = writeln!(out, "valid: {}", violations.is_empty());
    for v in &violations {
        let _ = writeln!(out, "violation: {v}");
    }
    emit(cli, &out)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} violation(s)", violations.len())))
    }
}

fn parse_branch(s: &str) -> Result<[Branch; 3], CliError> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != 3 {
        return Err(usage(format!("--branch needs three signs, got '{s}'")));
    }
    let mut out = [Branch::Minus; 3];
    for (o, c) in out.iter_mut().zip(chars) {
        *o = match c {
            '-' => Branch::Minus,
            '+' => Branch::Plus,
            _ => return Err(usage(format!("--branch accepts only '+' and '-', got '{s}'"))),
        };
    }
    Ok(out)
}

fn state_text(model: &Model, s: &State) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "point: {}", vec3(s.p().0));
    let _ = writeln!(out, "rho: {}", vec3(s.rho().rho));
    let branch: Vec<&str> = s.branch().iter().map(|b| if *b == Branch::Minus { "minus" } else { "plus" }).collect();
    let _ = writeln!(out, "branch: [{}]", branch.join(", "));
    let _ = writeln!(out, "within_limits: {}", s.within_limits());
    for i in 0..3 {
        let _ = writeln!(out, "b{}: {}", i + 1, vec3(s.b()[i].0));
    }
    for i in 0..3 {
        let _ = writeln!(out, "c{}: {}", i + 1, vec3(s.c()[i].0));
    }
    let _ = writeln!(out, "closure_residuals: {}", vec3(s.closure_residuals(model.geom.leg_length)));
    out
}

fn state_csv(s: &State) -> String {
    let p = s.p().0;
    let r = s.rho().rho;
    let mut out = String::from("x,y,z,rho1,rho2,rho3,within_limits\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        num(p[0]),
        num(p[1]),
        num(p[2]),
        num(r[0]),
        num(r[1]),
        num(r[2]),
        s.within_limits()
    );
    out
}

fn emit_state(cli: &Cli, model: &Model, s: &State) -> Result<(), CliError> {
    match cli.format.unwrap_or(Format::Text) {
        Format::Text => emit(cli, &state_text(model, s)),
        Format::Csv => emit(cli, &state_csv(s)),
    }
}

fn ik(cli: &Cli, model: &Model, point: [f64; 3], branch: &str) -> Result<(), CliError> {
    require_valid(model)?;
    announce("ik", model, &[("point", vec3(point)), ("branch", branch.to_string())]);
    let s = inverse_kinematics(&model.geom, Vector3::from(point), parse_branch(branch)?)?;
    emit_state(cli, model, &s)
}

fn fk(cli: &Cli, model: &Model, rho: [f64; 3], hint: Option<[f64; 3]>) -> Result<(), CliError> {
    require_valid(model)?;
    let hint_text = hint.map_or_else(|| "none".to_string(), vec3);
    announce("fk", model, &[("rho", vec3(rho)), ("hint", hint_text)]);
    let s = forward_kinematics(&model.geom, JointVector::new(rho), hint.map(Vector3::from))?;
    emit_state(cli, model, &s)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "unavailable".to_string(), num)
}

fn opt3(x: Option<[f64; 3]>) -> String {
    x.map_or_else(|| "unavailable".to_string(), vec3)
}

fn analyze_point(cli: &Cli, model: &Model, point: [f64; 3], tol: f64) -> Result<(), CliError> {
    require_valid(model)?;
    announce("analyze", model, &[("point", vec3(point)), ("tol", num(tol))]);
    let s = inverse_kinematics(&model.geom, Vector3::from(point), orthoglide::DEFAULT_BRANCHES)?;
    let r = analyze(&model.geom, &s);
    let iso = isotropy_check(&model.geom, &s, tol).ok();
    match cli.format.unwrap_or(Format::Text) {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "point: {}", vec3(point));
            let _ = writeln!(out, "rho: {}", vec3(s.rho().rho));
            let _ = writeln!(out, "kappa_rooted: {}", opt(r.kappa_rooted));
            let _ = writeln!(out, "kappa_ratio: {}", opt(r.kappa_ratio));
            let _ = writeln!(out, "singular_values_j_inv: {}", opt3(r.singular_values));
            let _ = writeln!(out, "psi: {}", opt3(r.psi));
            let _ = writeln!(out, "xi: {}", opt3(r.ellipsoid.map(|e| e.xi)));
            for k in 0..3 {
                let _ = writeln!(out, "axis{}: {}", k + 1, opt3(r.ellipsoid.map(|e| e.axes[k].0)));
            }
            let _ = writeln!(out, "eta: {}", vec3(r.eta));
            let _ = writeln!(out, "det_A: {}", num(r.det_a));
            let _ = writeln!(out, "det_B: {}", num(r.det_b));
            let _ = writeln!(out, "classification: {}", r.classification);
            match iso {
                Some(c) => {
                    let _ = writeln!(out, "isotropic: {}", c.isotropic);
                    let _ = writeln!(out, "isotropy_residual: {}", num(c.residuals.max_abs()));
                }
                None => {
                    let _ = writeln!(out, "isotropic: unavailable");
                }
            }
            emit(cli, &out)
        }
        Format::Csv => {
            let psi = r.psi.unwrap_or([f64::NAN; 3]);
            let mut out = String::from(
                "x,y,z,kappa_rooted,kappa_ratio,psi1,psi2,psi3,det_A,det_B,classification\n",
            );
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                num(point[0]),
                num(point[1]),
                num(point[2]),
                num(r.kappa_rooted.unwrap_or(f64::NAN)),
                num(r.kappa_ratio.unwrap_or(f64::NAN)),
                num(psi[0]),
                num(psi[1]),
                num(psi[2]),
                num(r.det_a),
                num(r.det_b),
                r.classification
            );
            emit(cli, &out)
        }
    }
}

fn predicate(model: &Model, args: &PredicateArgs) -> Result<Predicate, CliError> {
    let mut pred = Predicate::new(model.geom.clone());
    pred.psi_bounds = args.psi_bounds.0;
    pred.require_joint_limits = !args.no_joint_limits;
    pred.check().map_err(usage)?;
    Ok(pred)
}

fn bounds_text(args: &PredicateArgs) -> String {
    args.psi_bounds.0.map_or_else(|| "none".to_string(), |(lo, hi)| format!("{},{}", num(lo), num(hi)))
}

fn root_box(model: &Model, region: &RegionArgs) -> Result<Cube<f64>, CliError> {
    let center = match region.center {
        Some(c) => Vector3::from(c),
        None => model.geom.isotropic_point().map_err(usage)?,
    };
    let half = region.half_side.unwrap_or(1.5 * model.geom.leg_length);
    if half <= 0.0 || !half.is_finite() {
        return Err(usage(format!("--half-side must be positive, got {half}")));
    }
    Ok(Cube::new(center, half))
}

fn map(
    cli: &Cli,
    model: &Model,
    quantity: &str,
    grid: usize,
    region: &RegionArgs,
    pred_args: &PredicateArgs,
) -> Result<(), CliError> {
    require_valid(model)?;
    let q: Quantity = quantity.parse().map_err(usage)?;
    let pred = predicate(model, pred_args)?;
    let cube = match (&model.design, region.center, region.half_side) {
        (Some(d), None, None) => d.certified_cube,
        _ => root_box(model, region)?,
    };
    announce(
        "map",
        model,
        &[
            ("quantity", q.name().to_string()),
            ("grid", grid.to_string()),
            ("center", vec3(cube.center.0)),
            ("half_side", num(cube.half_side)),
            ("psi_bounds", bounds_text(pred_args)),
            ("joint_limits", (!pred_args.no_joint_limits).to_string()),
        ],
    );
    let field = scalar_field(&pred, q, &cube, grid).map_err(usage)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x,y,z,value,feasible\n");
            for ((p, v), f) in field.points.iter().zip(&field.values).zip(&field.feasible) {
                let _ = writeln!(out, "{},{},{},{},{}", num(p[0]), num(p[1]), num(p[2]), num(*v), u8::from(*f));
            }
            emit(cli, &out)
        }
        Format::Text => {
            let feasible = field.feasible.iter().filter(|f| **f).count();
            let mut out = String::new();
            let _ = writeln!(out, "quantity: {}", q.name());
            let _ = writeln!(out, "points: {}", field.points.len());
            let _ = writeln!(out, "feasible_points: {feasible}");
            match field.feasible_range() {
                Some((lo, hi)) => {
                    let _ = writeln!(out, "feasible_min: {}", num(lo));
                    let _ = writeln!(out, "feasible_max: {}", num(hi));
                }
                None => {
                    let _ = writeln!(out, "feasible_min: none");
                    let _ = writeln!(out, "feasible_max: none");
                }
            }
            emit(cli, &out)
        }
    }
}

fn workspace_summary(tree: &OctreeWorkspace<f64>, model: &Model) -> Result<String, CliError> {
    let conn = t_connected(tree);
    let count = |l: CellLabel| tree.leaves().filter(|c| c.label == l).count();
    let center = model.geom.isotropic_point().map_err(usage)?;
    let inscribed = tree.inscribed_cube(center);
    let mut out = String::new();
    let _ = writeln!(out, "root_center: {}", vec3(tree.root_box.center.0));
    let _ = writeln!(out, "root_half_side: {}", num(tree.root_box.half_side));
    let _ = writeln!(out, "max_depth: {}", tree.max_depth);
    let _ = writeln!(out, "volume_lower: {}", num(tree.volume_lower));
    let _ = writeln!(out, "volume_upper: {}", num(tree.volume_upper));
    let _ = writeln!(out, "inside_cells: {}", count(CellLabel::Inside));
    let _ = writeln!(out, "boundary_cells: {}", count(CellLabel::Boundary));
    let _ = writeln!(out, "outside_cells: {}", count(CellLabel::Outside));
    let _ = writeln!(out, "connected: {}", conn.connected);
    let _ = writeln!(out, "component_count: {}", conn.component_count);
    let _ = writeln!(out, "largest_component_volume: {}", num(conn.largest_component_volume));
    let _ = writeln!(out, "inscribed_cube_half_side: {}", num(inscribed));
    Ok(out)
}

fn workspace(
    cli: &Cli,
    model: &Model,
    depth: u32,
    summary: Option<&Path>,
    region: &RegionArgs,
    pred_args: &PredicateArgs,
) -> Result<(), CliError> {
    require_valid(model)?;
    let pred = predicate(model, pred_args)?;
    let root = root_box(model, region)?;
    announce(
        "workspace",
        model,
        &[
            ("depth", depth.to_string()),
            ("center", vec3(root.center.0)),
            ("half_side", num(root.half_side)),
            ("psi_bounds", bounds_text(pred_args)),
            ("joint_limits", (!pred_args.no_joint_limits).to_string()),
        ],
    );
    let tree = compute_octree(&pred, root, depth).map_err(usage)?;
    let text = workspace_summary(&tree, model)?;
    if let Some(path) = summary {
        write_atomic(path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x_center,y_center,z_center,half_side,label\n");
            for cell in tree.leaves() {
                let c = cell.cube.center;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    num(c[0]),
                    num(c[1]),
                    num(c[2]),
                    num(cell.cube.half_side),
                    cell.label.as_str()
                );
            }
            emit(cli, &out)
        }
        Format::Text => emit(cli, &text),
    }
}

fn section(
    cli: &Cli,
    model: &Model,
    axis: &str,
    offset: Option<f64>,
    resolution: usize,
    region: &RegionArgs,
    pred_args: &PredicateArgs,
) -> Result<(), CliError> {
    require_valid(model)?;
    let axis_index = match axis {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        other => return Err(usage(format!("--axis must be x, y or z, got '{other}'"))),
    };
    let pred = predicate(model, pred_args)?;
    let root = root_box(model, region)?;
    let offset = offset.unwrap_or(root.center[axis_index]);
    announce(
        "section",
        model,
        &[
            ("axis", axis.to_string()),
            ("offset", num(offset)),
            ("resolution", resolution.to_string()),
            ("center", vec3(root.center.0)),
            ("half_side", num(root.half_side)),
            ("psi_bounds", bounds_text(pred_args)),
            ("joint_limits", (!pred_args.no_joint_limits).to_string()),
        ],
    );
    let s = cross_section(&pred, &root, axis_index, offset, resolution).map_err(usage)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x,y,z,feasible\n");
            for iu in 0..resolution {
                for iv in 0..resolution {
                    let p = s.point(iu, iv);
                    let _ = writeln!(out, "{},{},{},{}", num(p[0]), num(p[1]), num(p[2]), u8::from(s.get(iu, iv)));
                }
            }
            emit(cli, &out)
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "axis: {axis}");
            let _ = writeln!(out, "offset: {}", num(offset));
            let _ = writeln!(out, "resolution: {resolution}");
            let _ = writeln!(out, "pixel: {}", num(s.pixel));
            let _ = writeln!(out, "feasible_pixels: {}", s.feasible.iter().filter(|f| **f).count());
            let _ = writeln!(out, "area: {}", num(s.area()));
            emit(cli, &out)
        }
    }
}

fn design(cli: &Cli, model: &Model, psi: (f64, f64), grid: usize) -> Result<(), CliError> {
    require_valid(model)?;
    if cli.format == Some(Format::Csv) {
        return Err(usage("design writes a model file; --format csv is not available"));
    }
    announce("design", model, &[("psi", format!("{},{}", num(psi.0), num(psi.1))), ("grid", grid.to_string())]);
    let result = size_joint_limits(&model.geom, psi, grid).map_err(|e| match e {
        orthoglide::DesignError::Infeasible => CliError::Kinematic(e.to_string()),
        other => usage(other),
    })?;
    emit(cli, &save_design(&model.geom, &result))
}
