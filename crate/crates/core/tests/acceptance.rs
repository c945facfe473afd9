mod common;

use std::time::{Duration, Instant};

use common::*;
use orthoglide::analysis::{analyze, isotropy_check, manipulability};
use orthoglide::design::{size_joint_limits, verify_cube};
use orthoglide::workspace::{compute_octree, cross_section, t_connected, CellLabel};
use orthoglide::{
    canonical_orthoglide, classify_singularity, condition_number, inverse_kinematics, jacobians, ConditionVariant,
    Cube, Geometry, Matrix3, Predicate, Vector3, DEFAULT_BRANCHES,
};

type Check = Result<String, String>;

const DESIGN_GRID: usize = 33;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn canonical() -> Geometry {
    canonical_orthoglide(1.0).unwrap()
}

fn designed(psi: (f64, f64)) -> (Geometry, orthoglide::Design) {
    let g = canonical();
    let d = size_joint_limits(&g, psi, DESIGN_GRID).expect("design");
    (g.with_joint_limits(d.joint_limits), d)
}

fn isotropy_at_center() -> Check {
    let g = canonical();
    let s = inverse_kinematics(&g, Vector3::zeros(), DEFAULT_BRANCHES).map_err(|e| e.to_string())?;
    let jac = jacobians(&g, &s);
    let j = jac.j.ok_or("J unavailable")?;
    let dev = j.max_abs_diff(&Matrix3::identity());
    ensure(dev <= 1e-9, format!("|J - I|max = {dev:e}"))?;
    let j_inv = jac.j_inv.ok_or("J^-1 unavailable")?;
    for v in [ConditionVariant::Rooted, ConditionVariant::Ratio] {
        let k = condition_number(&j_inv, v).unwrap();
        ensure((k - 1.0).abs() <= 1e-9, format!("kappa {} = {k}", v.label()))?;
    }
    let psi = analyze(&g, &s).psi.ok_or("psi unavailable")?;
    ensure(psi.iter().all(|v| (v - 1.0).abs() <= 1e-9), format!("psi = {psi:?}"))?;
    Ok(format!("|J - I|max = {dev:.1e}, psi = (1,1,1)"))
}

fn isotropy_conditions() -> Check {
    let g = canonical();
    let at = |p: Vector3| {
        let s = inverse_kinematics(&g, p, DEFAULT_BRANCHES).unwrap();
        isotropy_check(&g, &s, 1e-9).unwrap()
    };
    let center = at(Vector3::zeros());
    let worst = center.residuals.max_abs();
    ensure(center.isotropic && worst <= 1e-9, format!("centre residual {worst:e}"))?;
    let off = at(Vector3::new(0.0, 0.5, 0.0));
    let r = off.residuals.max_abs();
    ensure(!off.isotropic && r > 1e-3, format!("residual at (0,0.5,0) only {r:e}"))?;
    Ok(format!("centre max residual {worst:.1e}, (0,0.5,0) max residual {r:.4}"))
}

fn jacobian_consistency() -> Check {
    let (g, states) = well_conditioned_states(1.0, 1000, 3);
    let mut worst_aj = 0.0f64;
    let mut worst_inv = 0.0f64;
    let mut worst_fd = 0.0f64;
    let mut r = rng(33);
    let h = 1e-5 * g.leg_length;
    for s in &states {
        let jac = jacobians(&g, s);
        let j = jac.j.ok_or("J unavailable at a well-conditioned state")?;
        let j_inv = jac.j_inv.ok_or("J^-1 unavailable")?;
        worst_aj = worst_aj.max(jac.a.mul_mat(&j).max_abs_diff(&jac.b));
        let via_solve = jac.b.solve(&jac.a).ok_or("B singular")?;
        worst_inv = worst_inv.max(j_inv.max_abs_diff(&via_solve));

        let u = unit_vector(&mut r);
        let p = s.p().0;
        let rho0 = oracle_ik(1.0, p).ok_or("oracle IK failed")?;
        let q = s.p() + u.scale(h);
        let rho1 = oracle_ik(1.0, q.0).ok_or("oracle IK failed")?;
        let fd = Vector3::new((rho1[0] - rho0[0]) / h, (rho1[1] - rho0[1]) / h, (rho1[2] - rho0[2]) / h);
        let exact = j_inv.mul_vec(&u);
        worst_fd = worst_fd.max((fd - exact).norm() / exact.norm());
    }
    ensure(worst_aj <= 1e-9, format!("max |AJ - B| = {worst_aj:e}"))?;
    ensure(worst_inv <= 1e-9, format!("max |J^-1 - B^-1 A| = {worst_inv:e}"))?;
    ensure(worst_fd <= 1e-3, format!("finite-difference relative error {worst_fd:e}"))?;
    Ok(format!("|AJ-B| {worst_aj:.1e}, |J^-1 - B^-1 A| {worst_inv:.1e}, fd rel err {worst_fd:.1e}"))
}

fn singularity_criteria() -> Check {
    let g = canonical();
    let eps_b = 1e-9 * g.leg_length;
    let mut points: Vec<[f64; 3]> = Cube::new(Vector3::zeros(), 1.5).grid(50).into_iter().map(|p| p.0).collect();
    // Exact serial singularities: the link of leg i is orthogonal to e_i when
    // the other two coordinates lie on the unit circle.
    for t in Cube::new(Vector3::zeros(), 0.9).grid(7) {
        for i in 0..3 {
            for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let mut p = [0.0; 3];
                p[i] = t[0];
                p[(i + 1) % 3] = a;
                p[(i + 2) % 3] = b;
                points.push(p);
            }
        }
    }
    let mut evaluated = 0usize;
    let mut singular = 0usize;
    for p in &points {
        let Some(rho) = oracle_ik(1.0, *p) else { continue };
        let state = inverse_kinematics(&g, Vector3::from(*p), DEFAULT_BRANCHES).map_err(|e| format!("{p:?}: {e}"))?;
        let classification = classify_singularity(&jacobians(&g, &state));
        let expected: Vec<usize> = (0..3).filter(|&i| (p[i] - rho[i]).abs() <= eps_b).collect();
        ensure(
            classification.serial_legs == expected,
            format!("at {p:?}: got {:?}, oracle {:?}", classification.serial_legs, expected),
        )?;
        evaluated += 1;
        singular += usize::from(!expected.is_empty());
    }
    ensure(singular > 0, "no serial singularity exercised")?;

    let (gd, _) = designed((1.0 / 3.0, 3.0));
    let mut pred = Predicate::new(gd.clone());
    pred.psi_bounds = None;
    pred.min_eta = 0.0;
    pred.min_det_a = 0.0;
    let octree = compute_octree(&pred, Cube::new(Vector3::zeros(), 1.5), 5).map_err(|e| e.to_string())?;
    let eps_a = 1e-9;
    let mut min_det = f64::INFINITY;
    let mut inside = 0usize;
    for cell in octree.leaves().filter(|c| c.label == CellLabel::Inside) {
        inside += 1;
        let c = cell.cube.center;
        let h = cell.cube.half_side;
        let mut samples = vec![c];
        for k in 0..8 {
            samples.push(c + Vector3::new(
                if k & 1 == 0 { -h } else { h },
                if k & 2 == 0 { -h } else { h },
                if k & 4 == 0 { -h } else { h },
            ));
        }
        for p in samples {
            let rho = oracle_ik(1.0, p.0).ok_or("inside sample unreachable")?;
            let a = nalgebra::Matrix3::from_fn(|i, k| if i == k { p[k] - rho[i] } else { p[k] });
            min_det = min_det.min(a.determinant().abs());
        }
    }
    ensure(inside > 0, "no inside cells")?;
    ensure(min_det > eps_a, format!("min |det A| over inside cells {min_det:e}"))?;
    Ok(format!(
        "{evaluated} grid states ({singular} serial-singular) match the orthogonality oracle; min |det A| over {inside} inside cells = {min_det:.4}"
    ))
}

fn manipulability_duality() -> Check {
    let (g, states) = well_conditioned_states(1.0, 1000, 5);
    let mut worst_dual = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for s in &states {
        let report = analyze(&g, s);
        let psi = report.psi.ok_or("psi unavailable")?;
        let ell = manipulability(&jacobians(&g, s)).map_err(|e| e.to_string())?;
        for k in 0..3 {
            worst_dual = worst_dual.max((psi[k] * ell.xi[k] - 1.0).abs());
        }
        let oracle = oracle_psi(1.0, s.p().0).ok_or("oracle failed")?;
        for k in 0..3 {
            worst_oracle = worst_oracle.max((psi[k] - oracle[k]).abs());
        }
    }
    ensure(worst_dual <= 1e-9, format!("max |psi xi - 1| = {worst_dual:e}"))?;
    ensure(worst_oracle <= 1e-9, format!("max |psi - nalgebra| = {worst_oracle:e}"))?;

    let mut r = rng(55);
    let mut worst_q = 0.0f64;
    for (n, s) in states.iter().take(100).enumerate() {
        let j = to_na(&jacobians(&g, s).j.ok_or("J unavailable")?);
        let metric = (j * j.transpose()).try_inverse().ok_or("JJ^T singular")?;
        let rho_dot = to_na_vec(unit_vector(&mut r));
        let p_dot = j * rho_dot;
        let q = (p_dot.transpose() * metric * p_dot)[(0, 0)];
        ensure(q <= 1.0 + 1e-9, format!("sample {n}: p_dot^T (JJ^T)^-1 p_dot = {q}"))?;
        worst_q = worst_q.max(q);
    }
    Ok(format!("max |psi xi - 1| {worst_dual:.1e}, |psi - nalgebra| {worst_oracle:.1e}, max ellipsoid form {worst_q:.12}"))
}

fn amplification_bound() -> Check {
    let (_, d) = designed((1.0 / 3.0, 3.0));
    let cube = d.certified_cube;
    ensure(cube.half_side > 0.0, "empty certified cube")?;
    let fine = 2 * DESIGN_GRID;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in cube.grid(fine) {
        let psi = oracle_psi(1.0, p.0).ok_or_else(|| format!("oracle: {p:?} unreachable or singular"))?;
        lo = lo.min(psi[2]);
        hi = hi.max(psi[0]);
    }
    ensure(lo >= 1.0 / 3.0 && hi <= 3.0, format!("oracle psi range [{lo}, {hi}] on the {fine}^3 grid"))?;
    ensure(verify_cube(&canonical(), &cube, (1.0 / 3.0, 3.0), fine).passed, "library re-verification failed")?;
    let (_, narrow) = designed((0.5, 2.0));
    ensure(
        narrow.certified_cube.half_side <= cube.half_side,
        format!("s*(1/2,2) = {} > s*(1/3,3) = {}", narrow.certified_cube.half_side, cube.half_side),
    )?;
    Ok(format!(
        "s*(1/3,3) = {:.6}, oracle psi on {fine}^3 grid in [{lo:.6}, {hi:.6}], s*(1/2,2) = {:.6}",
        cube.half_side, narrow.certified_cube.half_side
    ))
}

fn workspace_computation() -> Check {
    let (gd, d) = designed((1.0 / 3.0, 3.0));
    let pred = Predicate::new(gd.clone());
    let root = Cube::new(Vector3::zeros(), 1.5);
    let trees: Vec<_> = [4, 5, 6].iter().map(|&depth| compute_octree(&pred, root, depth).unwrap()).collect();
    for w in trees.windows(2) {
        ensure(
            w[0].volume_lower <= w[1].volume_lower && w[0].volume_upper >= w[1].volume_upper,
            format!(
                "bounds not monotone: [{}, {}] then [{}, {}]",
                w[0].volume_lower, w[0].volume_upper, w[1].volume_lower, w[1].volume_upper
            ),
        )?;
    }
    let deepest = &trees[2];

    let limits = d.joint_limits.map(|r| (r.min, r.max));
    let n = 1_000_000;
    let frac = monte_carlo_fraction(n, 7, |r| uniform_in(r, [0.0; 3], 1.5), |p| oracle_feasible(1.0, &limits, (1.0 / 3.0, 3.0), p));
    let box_volume = root.volume();
    let v_mc = frac * box_volume;
    let sigma = box_volume * (frac * (1.0 - frac) / n as f64).sqrt();
    ensure(
        deepest.volume_lower - 3.0 * sigma <= v_mc && v_mc <= deepest.volume_upper + 3.0 * sigma,
        format!("Monte Carlo {v_mc} +- {sigma} outside [{}, {}]", deepest.volume_lower, deepest.volume_upper),
    )?;

    let conn = t_connected(deepest);
    ensure(conn.connected && conn.component_count == 1, format!("{} components", conn.component_count))?;

    let section = cross_section(&pred, &root, 2, 0.0, 256).map_err(|e| e.to_string())?;
    let mut asym = 0;
    for iu in 0..256 {
        for iv in 0..256 {
            asym += usize::from(section.get(iu, iv) != section.get(iv, iu));
        }
    }
    ensure(asym == 0, format!("{asym} pixels break x<->y symmetry"))?;

    let fine = cross_section(&pred, &root, 2, 0.0, 512).map_err(|e| e.to_string())?;
    let frac2 = monte_carlo_fraction(
        n,
        11,
        |r| {
            let q = uniform_in(r, [0.0; 3], 1.5);
            [q[0], q[1], 0.0]
        },
        |p| oracle_feasible(1.0, &limits, (1.0 / 3.0, 3.0), p),
    );
    let area_mc = frac2 * 9.0;
    let rel = (fine.area() - area_mc).abs() / area_mc;
    ensure(rel <= 0.02, format!("section area {} vs Monte Carlo {area_mc}", fine.area()))?;

    Ok(format!(
        "depth 4/5/6 bounds [{:.5},{:.5}] [{:.5},{:.5}] [{:.5},{:.5}], MC {v_mc:.5} +- {sigma:.5}, 1 component, section area {:.5} vs MC {area_mc:.5}",
        trees[0].volume_lower,
        trees[0].volume_upper,
        trees[1].volume_lower,
        trees[1].volume_upper,
        trees[2].volume_lower,
        trees[2].volume_upper,
        fine.area()
    ))
}

fn scale_invariance() -> Check {
    let base = canonical();
    let (_, states) = well_conditioned_states(1.0, 50, 8);
    let base_design = size_joint_limits(&base, (1.0 / 3.0, 3.0), DESIGN_GRID).unwrap();
    let mut worst = 0.0f64;
    for s in [0.5, 2.5] {
        let g = base.scaled(s);
        for st in &states {
            let a = analyze(&base, st);
            let scaled = inverse_kinematics(&g, st.p().scale(s), DEFAULT_BRANCHES).map_err(|e| e.to_string())?;
            let b = analyze(&g, &scaled);
            let ja = jacobians(&base, st).j.ok_or("J")?;
            let jb = jacobians(&g, &scaled).j.ok_or("J")?;
            worst = worst.max(ja.max_abs_diff(&jb));
            worst = worst.max((a.kappa_rooted.unwrap() - b.kappa_rooted.unwrap()).abs());
            worst = worst.max((a.kappa_ratio.unwrap() - b.kappa_ratio.unwrap()).abs());
            for k in 0..3 {
                worst = worst.max((a.psi.unwrap()[k] - b.psi.unwrap()[k]).abs());
            }
        }
        let d = size_joint_limits(&g, (1.0 / 3.0, 3.0), DESIGN_GRID).map_err(|e| e.to_string())?;
        let diff = (d.volume_ratio - base_design.volume_ratio).abs();
        ensure(diff <= 1e-9, format!("volume_ratio at s = {s}: {} vs {}", d.volume_ratio, base_design.volume_ratio))?;
        worst = worst.max(diff);
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}, volume_ratio {:.9}", base_design.volume_ratio))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Check); 8] = [
        ("isotropy at centre", 1, isotropy_at_center),
        ("isotropy conditions", 1, isotropy_conditions),
        ("Jacobian consistency", 10, jacobian_consistency),
        ("singularity criteria", 60, singularity_criteria),
        ("manipulability duality", 10, manipulability_duality),
        ("amplification bound", 300, amplification_bound),
        ("workspace computation", 300, workspace_computation),
        ("scale invariance", 10, scale_invariance),
    ];
    let mut failures = 0;
    for (n, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; too slow")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!(
            "criterion {} {status} {name} ({:.2} s, limit {limit} s): {detail}",
            n + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
