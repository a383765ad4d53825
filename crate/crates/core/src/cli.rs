//! Command-line front end.
//!
//! Trajectories go to `--out` as CSV or JSON; reports go to stdout as JSON.
//! Exit codes: 0 success, 2 invalid input or unwritable output path,
//! 3 non-convergence, 4 numerical abort or failed write.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde_json::{json, Map, Value};

use crate::ballistic::{
    ballistic_cubic_condition, circle_parameters, classify_s2, integrate_lp1, BallisticState, Sign,
};
use crate::dynamics::{
    horizontality_defects, integrate_cubic_sphere, integrate_ep2, integrate_nhp, lie_quadratic,
    project_initial_data, Ep2State, NhpState,
};
use crate::error::Error;
use crate::lie::{curvature_group, exp_so3, sectional_curvature_group, MetricTensor};
use crate::lifting::{
    lift_horizontality_defects, lift_obstruction, lift_sphere_cubic, liftability_certificate,
    LiftableCubic,
};
use crate::lp::{lp2_residuals, reduced_samples};
use crate::planner::{plan_waypoints, shoot_group, shoot_sphere, BvpProblem, PlanSettings};
use crate::sphere::{curvature_sphere, project, sectional_curvature_sphere, SpherePoint, TangentVector};
use crate::stencil::MIN_SAMPLES;
use crate::trajectory::{StateRecord, Table, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "rcubic",
    version,
    about = "Riemannian cubics on SO(3) and S²",
    args_override_self = true,
    after_help = "Vectors are comma-separated triples; `0` means the zero vector.\n\
                  `--config FILE` reads a JSON object whose keys are flag names; flags on the\n\
                  command line take precedence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the NHP cubic flow on SO(3) (bi-invariant metric)
    Nhp(NhpArgs),
    /// Integrate the group cubic flow for a general metric
    Ep2(Ep2Args),
    /// Integrate the cubic flow on the sphere
    CubicSphere(SphereArgs),
    /// Integrate a group geodesic and its projection to the sphere
    Ballistic(BallisticArgs),
    /// Horizontal lift of an integrated sphere cubic
    Lift(LiftArgs),
    /// Liftability certificate of a sphere cubic
    Certify(CertifyArgs),
    /// Reduced-system check of an NHP cubic projected to the sphere
    LpCheck(LpArgs),
    /// Curvature of SO(3) or S² on a pair of algebra elements
    Curvature(CurvatureArgs),
    /// Solve a two-point (or waypoint) boundary-value problem
    Plan(PlanArgs),
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Trajectory output file
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long = "t-final", default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(Args, Debug)]
struct NhpArgs {
    #[arg(long = "J", value_parser = parse_vec3, allow_hyphen_values = true)]
    j: Vector3<f64>,
    #[arg(long = "J1", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j1: Vector3<f64>,
    #[arg(long = "J2", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j2: Vector3<f64>,
    /// Initial group element as a rotation vector
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    g0: Vector3<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Ep2Args {
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    xi: Vector3<f64>,
    #[arg(long = "xi-dot", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    xi_dot: Vector3<f64>,
    #[arg(long = "xi-ddot", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    xi_ddot: Vector3<f64>,
    /// `identity` or the upper triangle i11,i12,i13,i22,i23,i33
    #[arg(long, default_value = "identity")]
    metric: String,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    g0: Vector3<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct SphereData {
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    x: Vector3<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    v: Vector3<f64>,
    /// First generator derivative (horizontal part is used)
    #[arg(long = "J1", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j1: Vector3<f64>,
    /// Second generator derivative (horizontal part is used)
    #[arg(long = "J2", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j2: Vector3<f64>,
}

#[derive(Args, Debug)]
struct SphereArgs {
    #[command(flatten)]
    data: SphereData,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BallisticArgs {
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    x: Vector3<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    v: Vector3<f64>,
    /// Vertical scalar equal to ±|v|
    #[arg(long = "equal-norm", allow_hyphen_values = true, value_parser = parse_sign, conflicts_with = "sigma")]
    equal_norm: Option<Sign>,
    /// Vertical scalar
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LiftArgs {
    #[command(flatten)]
    data: SphereData,
    /// Initial group element as a rotation vector; must map e_z to x
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    g0: Option<Vector3<f64>>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Use the closed-form curve exp((a t³/6 + b t²/2 + c t) d̂) q0
    #[arg(long)]
    liftable: bool,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    q0: Option<Vector3<f64>>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    d: Option<Vector3<f64>>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    a: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    b: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    c: f64,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    x: Option<Vector3<f64>>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    v: Option<Vector3<f64>>,
    #[arg(long = "J1", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j1: Vector3<f64>,
    #[arg(long = "J2", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j2: Vector3<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LpArgs {
    #[arg(long = "J", value_parser = parse_vec3, allow_hyphen_values = true)]
    j: Vector3<f64>,
    #[arg(long = "J1", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j1: Vector3<f64>,
    #[arg(long = "J2", value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    j2: Vector3<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0")]
    g0: Vector3<f64>,
    /// Sample stride used for the vector residual, reduced if the grid is too short
    #[arg(long, default_value_t = 25)]
    stride: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Space {
    Sphere,
    Group,
}

#[derive(Args, Debug)]
struct CurvatureArgs {
    #[arg(long, value_enum)]
    space: Space,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    xi: Vector3<f64>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    eta: Vector3<f64>,
    /// Base point (sphere only)
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,1")]
    x: Vector3<f64>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long, value_enum, default_value_t = Space::Sphere)]
    space: Space,
    /// Start point (sphere) or rotation vector (group)
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    from: Option<Vector3<f64>>,
    #[arg(long = "v-from", value_parser = parse_vec3, allow_hyphen_values = true)]
    v_from: Option<Vector3<f64>>,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    to: Option<Vector3<f64>>,
    #[arg(long = "v-to", value_parser = parse_vec3, allow_hyphen_values = true)]
    v_to: Option<Vector3<f64>>,
    /// Duration
    #[arg(long = "T", default_value_t = 1.0)]
    duration: f64,
    /// Waypoint `x,y,z:vx,vy,vz` (repeat; sphere only)
    #[arg(long, allow_hyphen_values = true, action = clap::ArgAction::Append)]
    waypoint: Vec<String>,
    /// Segment durations for waypoint planning
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    durations: Vec<f64>,
    #[arg(long, default_value_t = BvpProblem::DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = BvpProblem::DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = BvpProblem::DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let s = s.trim();
    if s == "0" {
        return Ok(Vector3::zeros());
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{s}`"));
    }
    let mut v = Vector3::zeros();
    for (k, p) in parts.iter().enumerate() {
        let x: f64 = p
            .trim()
            .parse()
            .map_err(|e| format!("bad component `{p}`: {e}"))?;
        if !x.is_finite() {
            return Err(format!("non-finite component `{p}`"));
        }
        v[k] = x;
    }
    Ok(v)
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s.trim() {
        "+" | "plus" | "1" | "+1" => Ok(Sign::Plus),
        "-" | "minus" | "-1" => Ok(Sign::Minus),
        other => Err(format!("expected + or -, got `{other}`")),
    }
}

fn parse_metric(s: &str) -> Result<MetricTensor, Error> {
    if s.trim() == "identity" {
        return Ok(MetricTensor::identity());
    }
    let vals = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidInput(format!("metric: {e}")))?;
    let arr: [f64; 6] = vals
        .try_into()
        .map_err(|_| Error::InvalidInput("metric needs 6 upper-triangular entries".into()))?;
    MetricTensor::from_upper(arr)
}

fn parse_waypoint(s: &str) -> Result<TangentVector, Error> {
    let (p, v) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("waypoint `{s}` must be `x,y,z:vx,vy,vz`")))?;
    let p = parse_vec3(p).map_err(Error::InvalidInput)?;
    let v = parse_vec3(v).map_err(Error::InvalidInput)?;
    TangentVector::new(SpherePoint::new(p)?, v)
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } => EXIT_NUMERICAL,
            Error::SegmentNotConverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

/// Result of a command: a JSON report, an optional table to write, and an
/// exit code for outcomes that are reported but unsuccessful.
struct Outcome {
    report: Value,
    table: Option<Table>,
    json_header: Option<(f64, f64)>,
    code: i32,
}

impl Outcome {
    fn with_trajectory<S: StateRecord>(report: Value, traj: &Trajectory<S>) -> Self {
        Self {
            report,
            table: Some(traj.to_table()),
            json_header: Some((traj.t0(), traj.dt())),
            code: EXIT_OK,
        }
    }

    fn report(report: Value) -> Self {
        Self {
            report,
            table: None,
            json_header: None,
            code: EXIT_OK,
        }
    }
}

fn vec_json(v: &Vector3<f64>) -> Value {
    json!([v.x, v.y, v.z])
}

fn summary<S: StateRecord>(command: &str, traj: &Trajectory<S>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("flavor".into(), json!(S::FLAVOR));
    m.insert("samples".into(), json!(traj.len()));
    m.insert("t_final".into(), json!(traj.t_final()));
    let mut cols = Map::new();
    for (name, value) in S::columns().into_iter().zip(traj.last().to_row()) {
        cols.insert(name, json!(value));
    }
    m.insert("final_state".into(), Value::Object(cols));
    m
}

fn sphere_point(v: &Vector3<f64>) -> Result<SpherePoint, Error> {
    SpherePoint::new(*v)
}

fn run_nhp(a: &NhpArgs) -> Result<Outcome, Failure> {
    let s = NhpState::new(a.j, a.j1, a.j2, exp_so3(&a.g0));
    let tr = integrate_nhp(&s, a.grid.t_final, a.grid.dt)?;
    let nu0 = lie_quadratic(&s);
    let drift = tr
        .states()
        .iter()
        .map(|st| (lie_quadratic(st) - nu0).norm())
        .fold(0.0, f64::max);
    let mut m = summary("nhp", &tr);
    m.insert("lie_quadratic".into(), vec_json(&nu0));
    m.insert("lie_quadratic_drift".into(), json!(drift));
    Ok(Outcome::with_trajectory(Value::Object(m), &tr))
}

fn run_ep2(a: &Ep2Args) -> Result<Outcome, Failure> {
    let metric = parse_metric(&a.metric)?;
    let s = Ep2State::from_jet(a.xi, a.xi_dot, a.xi_ddot, exp_so3(&a.g0), &metric);
    let tr = integrate_ep2(&s, &metric, a.grid.t_final, a.grid.dt)?;
    let m = summary("ep2", &tr);
    Ok(Outcome::with_trajectory(Value::Object(m), &tr))
}

fn sphere_state(d: &SphereData) -> Result<crate::dynamics::SphereCubicState, Error> {
    project_initial_data(&sphere_point(&d.x)?, &d.v, &d.j1, &d.j2)
}

fn run_cubic_sphere(a: &SphereArgs) -> Result<Outcome, Failure> {
    let s = sphere_state(&a.data)?;
    let tr = integrate_cubic_sphere(&s, a.grid.t_final, a.grid.dt)?;
    let worst = tr
        .states()
        .iter()
        .flat_map(horizontality_defects)
        .fold(0.0, f64::max);
    let mut m = summary("cubic-sphere", &tr);
    m.insert("max_horizontality_defect".into(), json!(worst));
    m.insert("lift_obstruction".into(), json!(lift_obstruction(&s)));
    Ok(Outcome::with_trajectory(Value::Object(m), &tr))
}

fn run_ballistic(a: &BallisticArgs) -> Result<Outcome, Failure> {
    let x = sphere_point(&a.x)?;
    let speed = TangentVector::new(x, a.v)?.v.norm();
    let sigma = match (a.equal_norm, a.sigma) {
        (Some(sign), _) => sign.value() * speed,
        (None, Some(s)) => s,
        (None, None) => 0.0,
    };
    let s = BallisticState::from_velocity(&x, &a.v, sigma)?;
    let tr = integrate_lp1(&s, a.grid.t_final, a.grid.dt)?;
    let mut m = summary("ballistic", &tr);
    m.insert("classification".into(), json!(classify_s2(&s).name()));
    m.insert("cubic_condition".into(), json!(ballistic_cubic_condition(&s)));
    m.insert("sigma".into(), json!(sigma));
    if let Some(sign) = a.equal_norm {
        let (axis, radius) = circle_parameters(&x, &a.v, sign)?;
        let observed: Vec<f64> = tr
            .states()
            .iter()
            .map(|st| {
                let p = st.x.as_vector();
                (p - axis * p.dot(&axis)).norm()
            })
            .collect();
        let dev = observed.iter().map(|r| (r - radius).abs()).fold(0.0, f64::max);
        m.insert("axis".into(), vec_json(&axis));
        m.insert("radius".into(), json!(radius));
        m.insert("max_radius_deviation".into(), json!(dev));
    }
    Ok(Outcome::with_trajectory(Value::Object(m), &tr))
}

fn run_lift(a: &LiftArgs) -> Result<Outcome, Failure> {
    let s = sphere_state(&a.data)?;
    let tr = integrate_cubic_sphere(&s, a.grid.t_final, a.grid.dt)?;
    let g0 = match a.g0 {
        Some(r) => exp_so3(&r),
        None => crate::sphere::rotation_between(&SpherePoint::anchor(), &s.x),
    };
    let lift = lift_sphere_cubic(&tr, &g0)?;
    let gap = tr
        .states()
        .iter()
        .zip(lift.states())
        .map(|(st, g)| (st.x.as_vector() - project(g).as_vector()).norm())
        .fold(0.0, f64::max);
    let defect = lift_horizontality_defects(&lift, &tr.map(|st| st.j))
        .into_iter()
        .fold(0.0, f64::max);
    let mut m = summary("lift", &lift);
    m.insert("max_projection_gap".into(), json!(gap));
    m.insert("max_horizontality_defect".into(), json!(defect));
    m.insert("lift_obstruction".into(), json!(lift_obstruction(&s)));
    Ok(Outcome::with_trajectory(Value::Object(m), &lift))
}

fn run_certify(a: &CertifyArgs) -> Result<Outcome, Failure> {
    let tr = if a.liftable {
        let (q0, d) = match (a.q0, a.d) {
            (Some(q0), Some(d)) => (q0, d),
            _ => return Err(Failure::invalid("--liftable needs --q0 and --d")),
        };
        LiftableCubic::new(sphere_point(&q0)?, d, a.a, a.b, a.c)?.states(a.grid.t_final, a.grid.dt)?
    } else {
        let (x, v) = match (a.x, a.v) {
            (Some(x), Some(v)) => (x, v),
            _ => return Err(Failure::invalid("certify needs --x and --v, or --liftable")),
        };
        let s = project_initial_data(&sphere_point(&x)?, &v, &a.j1, &a.j2)?;
        integrate_cubic_sphere(&s, a.grid.t_final, a.grid.dt)?
    };
    let cert = liftability_certificate(&tr)?;
    let mut m = summary("certify", &tr);
    m.insert(
        "certificate".into(),
        json!({
            "u": vec_json(&cert.u),
            "v": vec_json(&cert.v),
            "w": vec_json(&cert.w),
            "commutator_norms": cert.commutator_norms,
            "horizontality_defects": cert.horizontality_defects,
            "fit_residual": cert.fit_residual,
            "verdict": cert.verdict,
        }),
    );
    m.insert("lift_obstruction".into(), json!(lift_obstruction(tr.first())));
    Ok(Outcome::with_trajectory(Value::Object(m), &tr))
}

fn run_lp(a: &LpArgs) -> Result<Outcome, Failure> {
    let s = NhpState::new(a.j, a.j1, a.j2, exp_so3(&a.g0));
    let tr = integrate_nhp(&s, a.grid.t_final, a.grid.dt)?;
    let fine = lp2_residuals(&reduced_samples(&tr)?)?;
    let stride = a.stride.min((tr.len() - 1) / (MIN_SAMPLES - 1)).max(1);
    let coarse = lp2_residuals(&reduced_samples(&tr.decimate(stride)?)?)?;
    let mut m = summary("lp-check", &tr);
    m.insert("alpha_mean".into(), json!(fine.alpha_mean));
    m.insert("alpha_std".into(), json!(fine.alpha_std));
    m.insert("vector_residual_max".into(), json!(coarse.max_residual()));
    m.insert("residual_stride".into(), json!(stride));
    Ok(Outcome::with_trajectory(Value::Object(m), &tr))
}

fn run_curvature(a: &CurvatureArgs) -> Result<Outcome, Failure> {
    let report = match a.space {
        Space::Group => {
            let r = curvature_group(&a.xi, &a.eta, &MetricTensor::identity())?;
            json!({
                "command": "curvature",
                "space": "group",
                "value": vec_json(&r),
                "sectional": sectional_curvature_group(&a.xi, &a.eta).ok(),
            })
        }
        Space::Sphere => {
            let x = sphere_point(&a.x)?;
            let r = curvature_sphere(&a.xi, &a.eta, &x)?;
            json!({
                "command": "curvature",
                "space": "sphere",
                "value": vec_json(&r.v),
                "sectional": sectional_curvature_sphere(&a.xi, &a.eta, &x).ok(),
            })
        }
    };
    Ok(Outcome::report(report))
}

fn required(v: Option<Vector3<f64>>, name: &str) -> Result<Vector3<f64>, Failure> {
    v.ok_or_else(|| Failure::invalid(format!("plan needs --{name}")))
}

fn solution_report<S>(
    sol: &crate::planner::BvpSolution<S>,
    space: &str,
    tol: f64,
) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!("plan"));
    m.insert("space".into(), json!(space));
    m.insert("converged".into(), json!(sol.converged));
    m.insert("terminal_error".into(), json!(sol.terminal_error));
    m.insert("tolerance".into(), json!(tol));
    m.insert("iterations".into(), json!(sol.iterations));
    m.insert("unknowns".into(), json!(sol.unknowns));
    m
}

fn run_plan(a: &PlanArgs) -> Result<Outcome, Failure> {
    if !a.waypoint.is_empty() {
        if a.space != Space::Sphere {
            return Err(Failure::invalid("waypoint planning is only available on the sphere"));
        }
        let points = a
            .waypoint
            .iter()
            .map(|w| parse_waypoint(w))
            .collect::<Result<Vec<_>, _>>()?;
        let settings = PlanSettings {
            shooting_tolerance: a.tol,
            max_iterations: a.max_iter,
            dt: a.dt,
        };
        let plan = plan_waypoints(&points, &a.durations, &settings)?;
        let gaps: Vec<Value> = plan.junction_gaps.iter().map(|(p, v)| json!([p, v])).collect();
        let segs: Vec<Value> = plan
            .segments
            .iter()
            .map(|s| Value::Object(solution_report(s, "sphere", a.tol)))
            .collect();
        let report = json!({
            "command": "plan",
            "space": "sphere",
            "segments": segs,
            "junction_gaps": gaps,
            "samples": plan.samples.len(),
        });
        return Ok(Outcome {
            report,
            table: Some(plan.to_table()),
            json_header: None,
            code: EXIT_OK,
        });
    }
    let (from, v_from) = (required(a.from, "from")?, required(a.v_from, "v-from")?);
    let (to, v_to) = (required(a.to, "to")?, required(a.v_to, "v-to")?);
    let mut outcome = match a.space {
        Space::Sphere => {
            let start = TangentVector::new(sphere_point(&from)?, v_from)?;
            let end = TangentVector::new(sphere_point(&to)?, v_to)?;
            let problem = BvpProblem {
                shooting_tolerance: a.tol,
                max_iterations: a.max_iter,
                dt: a.dt,
                ..BvpProblem::sphere(start, end, a.duration)
            };
            let sol = shoot_sphere(&problem)?;
            let mut o = Outcome::with_trajectory(
                Value::Object(solution_report(&sol, "sphere", a.tol)),
                &sol.trajectory,
            );
            o.code = if sol.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
            o
        }
        Space::Group => {
            let problem = BvpProblem {
                shooting_tolerance: a.tol,
                max_iterations: a.max_iter,
                dt: a.dt,
                ..BvpProblem::group((exp_so3(&from), v_from), (exp_so3(&to), v_to), a.duration)
            };
            let sol = shoot_group(&problem)?;
            let mut o = Outcome::with_trajectory(
                Value::Object(solution_report(&sol, "group", a.tol)),
                &sol.trajectory,
            );
            o.code = if sol.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
            o
        }
    };
    if outcome.code == EXIT_NOT_CONVERGED {
        if let Value::Object(m) = &mut outcome.report {
            m.insert("status".into(), json!("not converged"));
        }
    }
    Ok(outcome)
}

fn output_of(cmd: &Command) -> Option<&OutputArgs> {
    match cmd {
        Command::Nhp(a) => Some(&a.output),
        Command::Ep2(a) => Some(&a.output),
        Command::CubicSphere(a) => Some(&a.output),
        Command::Ballistic(a) => Some(&a.output),
        Command::Lift(a) => Some(&a.output),
        Command::Certify(a) => Some(&a.output),
        Command::LpCheck(a) => Some(&a.output),
        Command::Curvature(_) => None,
        Command::Plan(a) => Some(&a.output),
    }
}

fn check_writable(path: &Path) -> Result<(), Failure> {
    if path.is_dir() {
        return Err(Failure::invalid(format!("{} is a directory", path.display())));
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Failure::invalid(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    if let Ok(meta) = std::fs::metadata(path) {
        if meta.permissions().readonly() {
            return Err(Failure::invalid(format!("{} is read-only", path.display())));
        }
    }
    Ok(())
}

fn render(table: &Table, header: Option<(f64, f64)>, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("flavor".into(), json!(table.flavor));
            if let Some((t0, dt)) = header {
                doc.insert("t0".into(), json!(t0));
                doc.insert("dt".into(), json!(dt));
            } else {
                doc.insert("t0".into(), json!(table.rows.first().map(|r| r[0])));
                doc.insert("dt".into(), Value::Null);
            }
            doc.insert("columns".into(), json!(table.columns));
            doc.insert("rows".into(), json!(table.rows));
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
            s.push('\n');
            s
        }
    }
}

/// Writes a trajectory file in the requested format.
pub fn serialize_trajectory<S: StateRecord>(
    traj: &Trajectory<S>,
    json_format: bool,
    path: &Path,
) -> std::io::Result<()> {
    let format = if json_format { Format::Json } else { Format::Csv };
    std::fs::write(path, render(&traj.to_table(), Some((traj.t0(), traj.dt())), format))
}

/// Expands `--config FILE` into flags placed right after the subcommand, so
/// that flags given on the command line override them.
fn expand_config(args: &[String]) -> Result<Vec<String>, Failure> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut k = 0;
    while k < args.len() {
        let a = &args[k];
        if a == "--config" {
            let path = args
                .get(k + 1)
                .ok_or_else(|| Failure::invalid("--config needs a file"))?;
            config = Some(path.clone());
            k += 2;
            continue;
        }
        if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
            k += 1;
            continue;
        }
        rest.push(a.clone());
        k += 1;
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::invalid(format!("cannot read config {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("config {path}: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Failure::invalid("config must be a JSON object"))?;
    let mut flags = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{key}");
        match value {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => {
                flags.push(flag);
                flags.push(n.to_string());
            }
            Value::String(s) => {
                flags.push(flag);
                flags.push(s.clone());
            }
            Value::Array(items) if items.iter().all(Value::is_number) => {
                flags.push(flag);
                let joined: Vec<String> = items.iter().map(|v| v.to_string()).collect();
                flags.push(joined.join(","));
            }
            Value::Array(items) => {
                for item in items {
                    let s = item
                        .as_str()
                        .map(str::to_string)
                        .unwrap_or_else(|| item.to_string());
                    flags.push(flag.clone());
                    flags.push(s);
                }
            }
            Value::Object(_) => {
                return Err(Failure::invalid(format!("config key {key}: nested objects not supported")))
            }
        }
    }
    let split = rest.len().min(2);
    let mut out: Vec<String> = rest[..split].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run_with(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    if let Some(out) = output_of(&cli.command) {
        if let Some(path) = &out.out {
            if let Err(f) = check_writable(path) {
                let _ = writeln!(stderr, "error: {}", f.message);
                return f.code;
            }
        }
    }
    let result = match &cli.command {
        Command::Nhp(a) => run_nhp(a),
        Command::Ep2(a) => run_ep2(a),
        Command::CubicSphere(a) => run_cubic_sphere(a),
        Command::Ballistic(a) => run_ballistic(a),
        Command::Lift(a) => run_lift(a),
        Command::Certify(a) => run_certify(a),
        Command::LpCheck(a) => run_lp(a),
        Command::Curvature(a) => run_curvature(a),
        Command::Plan(a) => run_plan(a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    if let (Some(table), Some(out)) = (&outcome.table, output_of(&cli.command)) {
        if let Some(path) = &out.out {
            let text = render(table, outcome.json_header, out.format);
            if let Err(e) = std::fs::write(path, text) {
                let _ = writeln!(stderr, "error: writing {}: {e}", path.display());
                return EXIT_NUMERICAL;
            }
        }
    }
    let text = serde_json::to_string_pretty(&outcome.report).expect("serializable");
    if writeln!(stdout, "{text}").is_err() {
        return EXIT_NUMERICAL;
    }
    outcome.code
}

/// Entry point used by the binary.
pub fn run(args: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
