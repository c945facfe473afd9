//! Model file reading and writing.
//!
//! The model file is a TOML document:
//!
//! ```toml
//! schema = 1
//! name = "canonical"          # optional
//! leg_length = 1.0
//!
//! [[legs]]                    # exactly three
//! anchor = [0.0, 0.0, 0.0]
//! axis = [1.0, 0.0, 0.0]
//! platform_offset = [0.0, 0.0, 0.0]   # optional, defaults to zero
//!
//! [[joint_limits]]            # exactly three
//! min = -2.0
//! max = 2.0
//! ```
//!
//! A sized machine written by the design step carries an additional
//! `[design_result]` table; the geometry loader accepts and ignores it.
//! Unknown keys, NaN and infinities are rejected. Floats are written in
//! shortest round-trip form so save followed by load is exact.

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::design::DesignResult;
use crate::error::ParseError;
use crate::linalg::Vec3;
use crate::model::{JointRange, LegGeometry, MachineGeometry};
use crate::workspace::Cube;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    leg_length: f64,
    legs: Spanned<Vec<LegEntry>>,
    joint_limits: Spanned<Vec<LimitEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    design_result: Option<DesignEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LegEntry {
    anchor: [f64; 3],
    axis: [f64; 3],
    #[serde(default)]
    platform_offset: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitEntry {
    min: f64,
    max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignEntry {
    psi_bounds: [f64; 2],
    grid_resolution: usize,
    certified_center: [f64; 3],
    certified_half_side: f64,
    psi_min: f64,
    psi_max: f64,
    volume_ratio: f64,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn located(src: &str, span: std::ops::Range<usize>, message: String) -> ParseError {
    ParseError { message, location: Some(line_col(src, span.start)) }
}

fn check_finite(path: &str, values: &[f64]) -> Result<(), ParseError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ParseError::new(format!("{path}: non-finite number")))
    }
}

fn parse_file(src: &str) -> Result<ModelFile, ParseError> {
    let file: ModelFile = toml::from_str(src).map_err(|e| ParseError {
        message: e.message().to_string(),
        location: e.span().map(|s| line_col(src, s.start)),
    })?;
    if file.schema != SCHEMA_VERSION {
        return Err(ParseError::new(format!("unsupported schema {} (expected {SCHEMA_VERSION})", file.schema)));
    }
    if file.legs.get_ref().len() != 3 {
        return Err(located(src, file.legs.span(), format!("expected 3 legs, found {}", file.legs.get_ref().len())));
    }
    if file.joint_limits.get_ref().len() != 3 {
        return Err(located(
            src,
            file.joint_limits.span(),
            format!("expected 3 joint_limits, found {}", file.joint_limits.get_ref().len()),
        ));
    }
    check_finite("leg_length", &[file.leg_length])?;
    for (i, leg) in file.legs.get_ref().iter().enumerate() {
        check_finite(&format!("legs[{i}].anchor"), &leg.anchor)?;
        check_finite(&format!("legs[{i}].axis"), &leg.axis)?;
        check_finite(&format!("legs[{i}].platform_offset"), &leg.platform_offset)?;
    }
    for (i, lim) in file.joint_limits.get_ref().iter().enumerate() {
        check_finite(&format!("joint_limits[{i}]"), &[lim.min, lim.max])?;
    }
    if let Some(d) = &file.design_result {
        check_finite("design_result", &[d.psi_bounds[0], d.psi_bounds[1], d.certified_half_side, d.psi_min, d.psi_max, d.volume_ratio])?;
        check_finite("design_result.certified_center", &d.certified_center)?;
    }
    Ok(file)
}

fn geometry_from(file: &ModelFile) -> MachineGeometry<f64> {
    let legs = file.legs.get_ref();
    let limits = file.joint_limits.get_ref();
    MachineGeometry {
        name: file.name.clone(),
        leg_length: file.leg_length,
        legs: [0, 1, 2].map(|i| LegGeometry {
            anchor: Vec3(legs[i].anchor),
            axis: Vec3(legs[i].axis),
            platform_offset: Vec3(legs[i].platform_offset),
        }),
        joint_limits: [0, 1, 2].map(|i| JointRange::new(limits[i].min, limits[i].max)),
    }
}

fn file_from(geom: &MachineGeometry<f64>, design_result: Option<DesignEntry>) -> ModelFile {
    ModelFile {
        schema: SCHEMA_VERSION,
        name: geom.name.clone(),
        leg_length: geom.leg_length,
        legs: Spanned::new(
            0..0,
            geom.legs
                .iter()
                .map(|l| LegEntry { anchor: l.anchor.0, axis: l.axis.0, platform_offset: l.platform_offset.0 })
                .collect(),
        ),
        joint_limits: Spanned::new(
            0..0,
            geom.joint_limits.iter().map(|r| LimitEntry { min: r.min, max: r.max }).collect(),
        ),
        design_result,
    }
}

/// Parses a model file. Geometric invariants are not checked here; use
/// [`MachineGeometry::validate`] on the result.
pub fn load_geometry(src: &str) -> Result<MachineGeometry<f64>, ParseError> {
    parse_file(src).map(|f| geometry_from(&f))
}

pub fn save_geometry(geom: &MachineGeometry<f64>) -> String {
    toml::to_string(&file_from(geom, None)).expect("model file serialization")
}

/// Writes a sized machine: the geometry with the sized joint limits plus a
/// `[design_result]` table. The output is itself a valid model file.
pub fn save_design(geom: &MachineGeometry<f64>, result: &DesignResult<f64>) -> String {
    let sized = geom.with_joint_limits(result.joint_limits);
    let entry = DesignEntry {
        psi_bounds: [result.psi_bounds.0, result.psi_bounds.1],
        grid_resolution: result.grid_resolution,
        certified_center: result.certified_cube.center.0,
        certified_half_side: result.certified_cube.half_side,
        psi_min: result.psi_extremes.0,
        psi_max: result.psi_extremes.1,
        volume_ratio: result.volume_ratio,
    };
    toml::to_string(&file_from(&sized, Some(entry))).expect("design file serialization")
}

/// Loads a file written by [`save_design`]. The design table is `None` for
/// a plain model file.
pub fn load_design(src: &str) -> Result<(MachineGeometry<f64>, Option<DesignResult<f64>>), ParseError> {
    let file = parse_file(src)?;
    let geom = geometry_from(&file);
    let result = file.design_result.as_ref().map(|d| DesignResult {
        joint_limits: geom.joint_limits,
        certified_cube: Cube::new(Vec3(d.certified_center), d.certified_half_side),
        psi_bounds: (d.psi_bounds[0], d.psi_bounds[1]),
        grid_resolution: d.grid_resolution,
        psi_extremes: (d.psi_min, d.psi_max),
        volume_ratio: d.volume_ratio,
    });
    Ok((geom, result))
}
