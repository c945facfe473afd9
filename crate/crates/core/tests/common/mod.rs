#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use orthoglide::{canonical_orthoglide, Geometry, Predicate, State, Vector3 as V, DEFAULT_BRANCHES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Closed-form IK of the canonical machine: leg `i` moves along `eᵢ` and the
/// minus root is taken.
pub fn oracle_ik(l: f64, p: [f64; 3]) -> Option<[f64; 3]> {
    let mut rho = [0.0; 3];
    for i in 0..3 {
        let w: f64 = (0..3).filter(|&j| j != i).map(|j| p[j] * p[j]).sum();
        if w > l * l {
            return None;
        }
        rho[i] = p[i] - (l * l - w).sqrt();
    }
    Some(rho)
}

/// Rows `(p − ρᵢeᵢ)/(pᵢ − ρᵢ)`.
pub fn oracle_j_inv(p: [f64; 3], rho: [f64; 3]) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let eta = p[i] - rho[i];
        for k in 0..3 {
            let link = if k == i { p[k] - rho[i] } else { p[k] };
            m[(i, k)] = link / eta;
        }
    }
    m
}

/// Singular values of `J`, descending, from nalgebra.
pub fn oracle_psi(l: f64, p: [f64; 3]) -> Option<[f64; 3]> {
    let rho = oracle_ik(l, p)?;
    let j = oracle_j_inv(p, rho).try_inverse()?;
    let mut s: Vec<f64> = j.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Some([s[0], s[1], s[2]])
}

pub fn to_na(m: &orthoglide::Matrix3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m.rows[i][j])
}

pub fn to_na_vec(v: V) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_in(rng: &mut ChaCha8Rng, center: [f64; 3], half: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| center[k] + rng.random_range(-half..half))
}

pub fn unit_vector(rng: &mut ChaCha8Rng) -> V {
    loop {
        let v = V::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Canonical states with every ψ inside [1/3, 3], drawn by rejection from a
/// cube of half-side `L`.
pub fn well_conditioned_states(l: f64, count: usize, seed: u64) -> (Geometry, Vec<State>) {
    let geom = canonical_orthoglide(l).unwrap();
    let mut pred = Predicate::new(geom.clone());
    pred.require_joint_limits = false;
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = V::from(uniform_in(&mut r, [0.0; 3], l));
        if orthoglide::evaluate_point(&pred, p).feasible {
            out.push(orthoglide::inverse_kinematics(&geom, p, DEFAULT_BRANCHES).unwrap());
        }
    }
    (geom, out)
}

/// Fraction of `n` uniform samples in the box for which `f` holds, using
/// fixed per-chunk seeds so the estimate does not depend on thread count.
pub fn monte_carlo_fraction<F>(n: usize, seed: u64, sample: impl Fn(&mut ChaCha8Rng) -> [f64; 3] + Sync, f: F) -> f64
where
    F: Fn([f64; 3]) -> bool + Sync,
{
    let chunks = 256;
    let per = n / chunks;
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng(seed.wrapping_mul(1_000_003).wrapping_add(c as u64));
            (0..per).filter(|_| f(sample(&mut r))).count()
        })
        .sum();
    hits as f64 / (per * chunks) as f64
}

/// Independent restatement of the default feasibility predicate for the
/// canonical machine, whose axis frame is right-handed so `det A > 0` in the
/// working assembly mode.
pub fn oracle_feasible(l: f64, limits: &[(f64, f64); 3], psi_bounds: (f64, f64), p: [f64; 3]) -> bool {
    let Some(rho) = oracle_ik(l, p) else {
        return false;
    };
    if (0..3).any(|i| !(rho[i] >= limits[i].0 && rho[i] <= limits[i].1)) {
        return false;
    }
    if (0..3).any(|i| p[i] - rho[i] < 1e-6 * l) {
        return false;
    }
    let a = Matrix3::from_fn(|i, k| if i == k { p[k] - rho[i] } else { p[k] });
    if a.determinant() < 1e-6 * l * l * l {
        return false;
    }
    match oracle_psi(l, p) {
        Some(s) => s.iter().all(|&v| v >= psi_bounds.0 && v <= psi_bounds.1),
        None => false,
    }
}
