mod commands;
mod number;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "orthoglide", version, about = "Kinematic and workspace analysis of the Orthoglide machine")]
pub struct Cli {
    /// Model file (TOML). Without it the canonical machine with L = 1 is used.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Write the primary output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for grid and octree evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the model file and report geometric violations.
    Validate,
    /// Joint positions for a platform position.
    Ik {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        point: [f64; 3],
        /// Per-leg branch, e.g. "---" or "-+-".
        #[arg(long, default_value = "---", allow_hyphen_values = true)]
        branch: String,
    },
    /// Platform position for joint positions.
    Fk {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        rho: [f64; 3],
        /// Pick the assembly nearest to this point.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        hint: Option<[f64; 3]>,
    },
    /// Conditioning, amplification factors and singularity status at a point.
    Analyze {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        point: [f64; 3],
        /// Tolerance of the isotropy test.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Sample a quantity on a cubic grid.
    Map {
        /// kappa, psi_max, psi_min, det_A, det_B or eta_min.
        #[arg(long)]
        quantity: String,
        /// Points per axis.
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Octree decomposition of the workspace.
    Workspace {
        #[arg(long, default_value_t = 6)]
        depth: u32,
        /// Also write the structured-text summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Feasibility on a plane through the root box.
    Section {
        /// Normal axis of the plane: x, y or z.
        #[arg(long, default_value = "z")]
        axis: String,
        /// Plane coordinate; defaults to the isotropic point's.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[command(flatten)]
        region: RegionArgs,
        #[command(flatten)]
        predicate: PredicateArgs,
    },
    /// Size the joint limits for an amplification bound.
    Design {
        /// Bounds lo,hi on every velocity amplification factor.
        #[arg(long, value_parser = parse_pair, default_value = "1/3,3")]
        psi: (f64, f64),
        /// Verification grid points per axis.
        #[arg(long, default_value_t = 33)]
        grid: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RegionArgs {
    /// Centre of the sampled cube; defaults to the isotropic point.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub center: Option<[f64; 3]>,
    /// Half-side of the sampled cube; defaults to 1.5 L.
    #[arg(long)]
    pub half_side: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct PredicateArgs {
    /// Bounds lo,hi on every velocity amplification factor, or "none".
    #[arg(long = "psi-bounds", value_parser = parse_bounds, default_value = "1/3,3")]
    pub psi_bounds: Bounds,
    /// Ignore the model's joint limits.
    #[arg(long)]
    pub no_joint_limits: bool,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_number(p)?;
    }
    Ok(out)
}

/// A decimal number or a fraction such as `1/3`.
fn parse_number(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| format!("'{s}': {e}"))?;
            let d: f64 = d.trim().parse().map_err(|e| format!("'{s}': {e}"))?;
            n / d
        }
        None => s.parse().map_err(|e| format!("'{s}': {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => Ok((parse_number(a)?, parse_number(b)?)),
        _ => Err(format!("expected lo,hi, got '{s}'")),
    }
}

/// Optional amplification bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds(pub Option<(f64, f64)>);

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    if s == "none" {
        Ok(Bounds(None))
    } else {
        parse_pair(s).map(|b| Bounds(Some(b)))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
