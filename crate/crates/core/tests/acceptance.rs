//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use riemcubic::ballistic::{
    ballistic_cubic_condition, circle_parameters, classify_s2, equal_norm_state, integrate_lp1,
    BallisticClass, BallisticState, Sign,
};
use riemcubic::dynamics::{
    integrate_cubic_sphere, integrate_ep2, integrate_nhp, lie_quadratic, project_initial_data,
    Ep2State, NhpState,
};
use riemcubic::lie::{exp_so3, sectional_curvature_group, vee, GroupElement, MetricTensor};
use riemcubic::lifting::{lift_obstruction, lift_sphere_cubic, liftability_certificate, LiftableCubic};
use riemcubic::lp::{lp2_residuals, reduced_samples};
use riemcubic::planner::{shoot_sphere, sphere_initial_state, BvpProblem};
use riemcubic::sphere::{
    cubic_residual_sphere, project, sectional_curvature_sphere, SpherePoint, TangentVector,
};
use riemcubic::stencil::{derivative, interior, observed_order};
use riemcubic::Trajectory;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn v(a: f64, b: f64, c: f64) -> Vector3<f64> {
    Vector3::new(a, b, c)
}

fn random_unit(rng: &mut StdRng) -> Vector3<f64> {
    loop {
        let w = v(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if w.norm() > 0.2 {
            return w.normalize();
        }
    }
}

fn lie_quadratic_conservation() -> Check {
    let s = NhpState::new(v(0.3, -0.2, 0.9), v(1.0, 0.0, 0.2), v(0.0, 0.5, 0.0), GroupElement::identity());
    let tr = integrate_nhp(&s, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let nu0 = lie_quadratic(&s);
    let drift = tr
        .states()
        .iter()
        .map(|st| (lie_quadratic(st) - nu0).norm())
        .fold(0.0, f64::max);
    ensure(drift <= 1e-10, format!("max drift {drift:.2e} (limit 1e-10)"))
}

fn bi_invariant_reduction() -> Check {
    let s = NhpState::new(v(0.3, -0.2, 0.9), v(1.0, 0.0, 0.2), v(0.0, 0.5, 0.0), exp_so3(&v(0.1, 0.4, -0.3)));
    let nhp = integrate_nhp(&s, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let ep2 = integrate_ep2(&Ep2State::from_nhp(&s), &MetricTensor::identity(), 1.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let gap = nhp
        .states()
        .iter()
        .zip(ep2.states())
        .map(|(a, b)| (a.g.matrix() - b.g.matrix()).amax().max((a.j - b.xi).amax()))
        .fold(0.0, f64::max);
    ensure(gap <= 1e-9, format!("sup gap {gap:.2e} (limit 1e-9)"))
}

fn projection_equivalence() -> Check {
    let d = v(0.6, 0.8, 0.0);
    let (j, j1, j2) = (d * 0.9, d * 0.4, d * -0.3);
    let x = SpherePoint::anchor();
    let nhp = integrate_nhp(&NhpState::new(j, j1, j2, GroupElement::identity()), 1.0, 1e-3)
        .map_err(|e| e.to_string())?;
    let sc = integrate_cubic_sphere(
        &project_initial_data(&x, &j.cross(x.as_vector()), &j1, &j2).map_err(|e| e.to_string())?,
        1.0,
        1e-3,
    )
    .map_err(|e| e.to_string())?;
    let gap = nhp
        .states()
        .iter()
        .zip(sc.states())
        .map(|(a, b)| (project(&a.g).as_vector() - b.x.as_vector()).norm())
        .fold(0.0, f64::max);
    ensure(gap <= 1e-7, format!("sup gap {gap:.2e} (limit 1e-7)"))
}

fn residual_convergence() -> Check {
    const STRIDE: usize = 25;
    let s = project_initial_data(&SpherePoint::anchor(), &Vector3::x(), &Vector3::y(), &v(0.3, 0.2, 0.0))
        .map_err(|e| e.to_string())?;
    let hs = [4e-3, 2e-3, 1e-3];
    let (lo, hi) = (0.3 - 1e-9, 0.7 + 1e-9);
    let mut maxima = Vec::new();
    for h in hs {
        let tr = integrate_cubic_sphere(&s, 1.0, h).map_err(|e| e.to_string())?;
        let res = cubic_residual_sphere(&tr.decimate(STRIDE).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let m = res
            .times
            .iter()
            .zip(&res.values)
            .filter(|(t, _)| (lo..=hi).contains(*t))
            .map(|(_, r)| r.norm())
            .fold(0.0, f64::max);
        maxima.push(m);
    }
    let orders: Vec<f64> = maxima.windows(2).map(|w| observed_order(w[0], w[1], 2.0)).collect();
    ensure(
        orders.iter().all(|p| *p >= 3.5),
        format!(
            "residuals {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2} (limit 3.5)",
            maxima[0], maxima[1], maxima[2], orders[0], orders[1]
        ),
    )
}

/// NHP residual of the right velocity of a group curve, from stencils.
fn nhp_residual(lift: &Trajectory<GroupElement>) -> f64 {
    let h = lift.dt();
    let gs: Vec<Matrix3<f64>> = lift.states().iter().map(|g| *g.matrix()).collect();
    let xi: Vec<Vector3<f64>> = interior(gs.len())
        .map(|k| {
            let a = derivative(&gs, k, 1, h) * gs[k].transpose();
            vee(&((a - a.transpose()) * 0.5)).expect("antisymmetric part")
        })
        .collect();
    interior(xi.len())
        .map(|k| {
            let r = derivative(&xi, k, 3, h) + derivative(&xi, k, 2, h).cross(&xi[k]);
            r.norm()
        })
        .fold(0.0, f64::max)
}

fn lifting_theorem() -> Check {
    let q0 = SpherePoint::anchor();
    let curve = LiftableCubic::new(q0, Vector3::y(), 1.0, 0.5, 0.2).map_err(|e| e.to_string())?;
    let states = curve.states(1.0, 1e-2).map_err(|e| e.to_string())?;
    let cert = liftability_certificate(&states).map_err(|e| e.to_string())?;
    let defect = cert.horizontality_defects.iter().cloned().fold(0.0, f64::max);
    let lift = lift_sphere_cubic(&states, &GroupElement::identity()).map_err(|e| e.to_string())?;
    let residual = nhp_residual(&lift);

    let generic = project_initial_data(&q0, &Vector3::x().cross(q0.as_vector()), &Vector3::y(), &Vector3::zeros())
        .map_err(|e| e.to_string())?;
    let obstruction = lift_obstruction(&generic);
    let tr = integrate_cubic_sphere(&generic, 1.0, 1e-2).map_err(|e| e.to_string())?;
    let generic_cert = liftability_certificate(&tr).map_err(|e| e.to_string())?;
    ensure(
        cert.verdict && defect <= 1e-8 && residual <= 1e-5 && obstruction == 1.0 && !generic_cert.verdict,
        format!(
            "forward verdict {} defect {defect:.1e} lift NHP residual {residual:.1e}; backward obstruction {obstruction} verdict {}",
            cert.verdict, generic_cert.verdict
        ),
    )
}

fn ballistic_circles() -> Check {
    let x = SpherePoint::new(Vector3::x()).map_err(|e| e.to_string())?;
    let vel = Vector3::y();
    let mut worst_radius = 0.0f64;
    let mut worst_condition = 0.0f64;
    for sign in [Sign::Plus, Sign::Minus] {
        let s = equal_norm_state(&x, &vel, sign).map_err(|e| e.to_string())?;
        let (axis, radius) = circle_parameters(&x, &vel, sign).map_err(|e| e.to_string())?;
        worst_radius = worst_radius.max((radius - 0.5f64.sqrt()).abs());
        let tr = integrate_lp1(&s, 2.0 * std::f64::consts::PI, 1e-3).map_err(|e| e.to_string())?;
        for st in tr.states() {
            let p = st.x.as_vector();
            let r = (p - axis * p.dot(&axis)).norm();
            worst_radius = worst_radius.max((r - 0.5f64.sqrt()).abs());
            worst_condition = worst_condition.max(ballistic_cubic_condition(st));
        }
    }
    let two_to_one = BallisticState::new(x, Vector3::z(), 2.0 * Vector3::x()).map_err(|e| e.to_string())?;
    let value = ballistic_cubic_condition(&two_to_one);
    let class = classify_s2(&two_to_one);
    ensure(
        worst_radius <= 1e-7
            && worst_condition <= 1e-10
            && (value - 3.0).abs() <= 1e-12
            && class == BallisticClass::NonCubic,
        format!(
            "radius deviation {worst_radius:.1e}, condition {worst_condition:.1e}; 2:1 condition {value} (expected 3 ± 1e-12), class {}",
            class.name()
        ),
    )
}

fn curvature_formulas() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    let (mut group, mut sphere) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let frame = exp_so3(&(random_unit(&mut rng) * rng.gen_range(0.0..3.0)));
        let (a, b) = (frame.matrix().column(0).into_owned(), frame.matrix().column(1).into_owned());
        let k = sectional_curvature_group(&a, &b).map_err(|e| e.to_string())?;
        group = group.max((k - 0.25).abs());

        let x = SpherePoint::normalized(random_unit(&mut rng)).map_err(|e| e.to_string())?;
        let w = random_unit(&mut rng);
        let e1 = (w - x.as_vector() * w.dot(x.as_vector())).normalize();
        let e2 = x.as_vector().cross(&e1);
        let k = sectional_curvature_sphere(&e1, &e2, &x).map_err(|e| e.to_string())?;
        sphere = sphere.max((k - 1.0).abs());
    }
    ensure(
        group <= 1e-12 && sphere <= 1e-12,
        format!("max deviation SO(3) {group:.1e}, S² {sphere:.1e} over 100 frames"),
    )
}

fn alpha_constancy() -> Check {
    let alpha_stats = |j, j1, j2| -> Result<(f64, f64), String> {
        let s = NhpState::new(j, j1, j2, GroupElement::identity());
        let tr = integrate_nhp(&s, 1.0, 1e-3).map_err(|e| e.to_string())?;
        let report = lp2_residuals(&reduced_samples(&tr).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        Ok((report.alpha_mean, report.alpha_std))
    };
    let (mean, std) = alpha_stats(v(0.5, 0.0, 0.8), v(0.0, 0.3, 0.0), v(0.1, 0.0, 0.0))?;
    let (mean2, std2) = alpha_stats(v(1.0, 2.0, 3.0), v(-1.0, 0.5, 0.2), v(0.3, 0.5, -1.0))?;
    ensure(
        std <= 1e-4 && std2 <= 1e-4,
        format!("alpha mean {mean:.2e}, std {std:.1e}; second case mean {mean2:.6}, std {std2:.1e} (limit 1e-4)"),
    )
}

fn plant_and_recover() -> Check {
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut worst_err, mut worst_iter, mut failures) = (0.0f64, 0usize, 0usize);
    for _ in 0..20 {
        let x0 = SpherePoint::normalized(random_unit(&mut rng)).map_err(|e| e.to_string())?;
        let w = v(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v0 = w - x0.as_vector() * w.dot(x0.as_vector());
        let start = TangentVector::new(x0, v0).map_err(|e| e.to_string())?;
        let mut u: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let target = rng.gen_range(0.0..1.5);
        u.iter_mut().for_each(|a| *a *= target / n);
        let planted = sphere_initial_state(&BvpProblem::sphere(start, start, 1.0), &u).map_err(|e| e.to_string())?;
        let forward = integrate_cubic_sphere(&planted, 1.0, BvpProblem::DEFAULT_DT).map_err(|e| e.to_string())?;
        let e = forward.last();
        let end = TangentVector::new(e.x, e.velocity()).map_err(|e| e.to_string())?;
        let sol = shoot_sphere(&BvpProblem::sphere(start, end, 1.0)).map_err(|e| e.to_string())?;
        worst_err = worst_err.max(sol.terminal_error);
        worst_iter = worst_iter.max(sol.iterations);
        if !(sol.converged && sol.terminal_error <= 1e-6 && sol.iterations <= 25) {
            failures += 1;
        }
    }
    ensure(
        failures == 0,
        format!("{} of 20 recovered, worst terminal error {worst_err:.1e}, worst iterations {worst_iter}", 20 - failures),
    )
}

fn run_cli(dir: &Path, tag: &str, args: &[&str]) -> Result<(Vec<u8>, Option<Vec<u8>>), String> {
    let out_path = dir.join(format!("{tag}.out"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rcubic"));
    cmd.args(args);
    let writes = args[0] != "curvature";
    if writes {
        cmd.arg("--out").arg(&out_path);
    }
    let output = cmd.output().map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("{} exited with {:?}", args[0], output.status.code()));
    }
    let file = if writes {
        Some(std::fs::read(&out_path).map_err(|e| e.to_string())?)
    } else {
        None
    };
    Ok((output.stdout, file))
}

fn cli_determinism() -> Check {
    let commands: Vec<Vec<&str>> = vec![
        vec!["nhp", "--J", "0.3,-0.2,0.9", "--J1", "1,0,0.2", "--J2", "0,0.5,0", "--dt", "1e-2"],
        vec!["ep2", "--xi", "0.3,-0.2,0.9", "--xi-dot", "1,0,0.2", "--metric", "1,0,0,2,0,3", "--format", "json"],
        vec!["cubic-sphere", "--x", "0,0,1", "--v", "1,0,0", "--J1", "0,1,0", "--J2", "0.3,0.2,0"],
        vec!["ballistic", "--x", "1,0,0", "--v", "0,1,0", "--equal-norm", "+", "--t-final", "6.283185307179586"],
        vec!["lift", "--x", "0,0,1", "--v", "1,0,0", "--J1", "0,1,0", "--format", "json"],
        vec!["certify", "--liftable", "--q0", "0,0,1", "--d", "0,1,0", "--a", "1", "--b", "0.5", "--c", "0.2", "--dt", "1e-2"],
        vec!["lp-check", "--J", "0.5,0,0.8", "--J1", "0,0.3,0", "--J2", "0.1,0,0"],
        vec!["curvature", "--space", "sphere", "--xi", "1,0,0", "--eta", "0,1,0"],
        vec![
            "plan", "--from", "0,0,1", "--v-from", "1,0,0",
            "--to", "0.8414709848078965,0,0.5403023058681398", "--v-to", "0.5403023058681398,0.2,-0.8414709848078965",
        ],
        vec!["plan", "--waypoint", "0,0,1:1,0,0", "--waypoint", "1,0,0:0,1,0", "--waypoint", "0,1,0:0,0,1", "--durations", "1,1"],
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for (k, args) in commands.iter().enumerate() {
        let first = run_cli(dir.path(), &format!("{k}a"), args)?;
        let second = run_cli(dir.path(), &format!("{k}b"), args)?;
        if first != second {
            differing.push(args[0]);
        }
    }
    ensure(
        differing.is_empty(),
        format!("{} command runs, differing: {:?}", commands.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("1 Lie-quadratic conservation", lie_quadratic_conservation),
        ("2 bi-invariant reduction", bi_invariant_reduction),
        ("3 projection equivalence", projection_equivalence),
        ("4 cubic residual convergence", residual_convergence),
        ("5 lifting theorem", lifting_theorem),
        ("6 ballistic circles", ballistic_circles),
        ("7 curvature formulas", curvature_formulas),
        ("8 LP alpha constancy", alpha_constancy),
        ("9 BVP plant-and-recover", plant_and_recover),
        ("10 CLI determinism", cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let started = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        10 - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
