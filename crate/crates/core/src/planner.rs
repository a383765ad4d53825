//! Two-point boundary-value problems for cubics by single shooting.
//!
//! The unknowns are the free initial derivatives of the generator. Each
//! Newton step uses a forward-difference Jacobian and halves the step (up to
//! eight times) until the residual norm decreases. The initial guess is the
//! geodesic (all unknowns zero).

use nalgebra::{DMatrix, DVector, Vector3};

use crate::dynamics::{
    integrate, nhp_rhs, project_initial_data, NhpState, SphereCubicState, cubic_sphere_rhs,
};
use crate::error::{Error, Result};
use crate::lie::{log_so3, AlgebraVector, GroupElement};
use crate::sphere::{SpherePoint, TangentVector};
use crate::trajectory::{StateRecord, Table, Trajectory};

const FD_STEP: f64 = 1e-6;
const MAX_HALVINGS: usize = 8;
const ANTIPODAL_TOL: f64 = 1e-6;

/// Boundary data: point and velocity at each end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryData {
    Sphere {
        start: TangentVector,
        end: TangentVector,
    },
    /// Group points with right velocities `ġ g⁻¹`.
    Group {
        start: (GroupElement, AlgebraVector),
        end: (GroupElement, AlgebraVector),
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpProblem {
    pub boundary: BoundaryData,
    pub duration: f64,
    pub shooting_tolerance: f64,
    pub max_iterations: usize,
    /// Largest integrator step; the step used divides `duration` evenly.
    pub dt: f64,
}

impl BvpProblem {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;
    pub const DEFAULT_MAX_ITERATIONS: usize = 25;
    pub const DEFAULT_DT: f64 = 1e-2;

    pub fn sphere(start: TangentVector, end: TangentVector, duration: f64) -> Self {
        Self {
            boundary: BoundaryData::Sphere { start, end },
            duration,
            shooting_tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            dt: Self::DEFAULT_DT,
        }
    }

    pub fn group(
        start: (GroupElement, AlgebraVector),
        end: (GroupElement, AlgebraVector),
        duration: f64,
    ) -> Self {
        Self {
            boundary: BoundaryData::Group { start, end },
            duration,
            shooting_tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            dt: Self::DEFAULT_DT,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidStep(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidStep(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.shooting_tolerance >= 0.0) {
            return Err(Error::InvalidInput("negative shooting tolerance".into()));
        }
        Ok(())
    }

    /// Integrator step that lands exactly on `duration`.
    pub fn effective_dt(&self) -> f64 {
        let n = (self.duration / self.dt - 1e-9).ceil().max(1.0);
        self.duration / n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution<S> {
    pub trajectory: Trajectory<S>,
    pub unknowns: Vec<f64>,
    pub terminal_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Orthonormal basis of the tangent plane at `x`, built from the coordinate
/// axis least aligned with `x`.
pub fn tangent_frame(x: &SpherePoint) -> (Vector3<f64>, Vector3<f64>) {
    let p = x.as_vector();
    let k = p.iamin();
    let axis = Vector3::ith(k, 1.0);
    let e1 = (axis - p * axis.dot(p)).normalize();
    (e1, p.cross(&e1))
}

/// Log map of the sphere at `base`: the tangent vector at `base` pointing
/// to `x` with length equal to the arc distance.
pub fn sphere_log(base: &SpherePoint, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    let b = base.as_vector();
    let w = x - b * x.dot(b);
    let theta = b.cross(x).norm().atan2(b.dot(x));
    if theta > std::f64::consts::PI - ANTIPODAL_TOL {
        return Err(Error::ChartFailure("point is antipodal to the chart center".into()));
    }
    let n = w.norm();
    if n == 0.0 {
        return Ok(Vector3::zeros());
    }
    Ok(w * (theta / n))
}

struct Shooter<'a, S> {
    eval: Box<dyn Fn(&DVector<f64>) -> Result<(DVector<f64>, Trajectory<S>)> + 'a>,
}

fn newton<S: Clone>(
    shooter: &Shooter<'_, S>,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<BvpSolution<S>> {
    let mut u = DVector::zeros(n);
    let (mut r, mut traj) = (shooter.eval)(&u)?;
    let mut err = r.norm();
    let mut iterations = 0;
    while err > tol && iterations < max_iter {
        let mut jac = DMatrix::zeros(r.len(), n);
        for k in 0..n {
            let h = FD_STEP * u[k].abs().max(1.0);
            let mut up = u.clone();
            up[k] += h;
            let (rp, _) = (shooter.eval)(&up)?;
            jac.set_column(k, &((rp - &r) / h));
        }
        let step = match jac.clone().lu().solve(&(-&r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => jac
                .svd(true, true)
                .solve(&(-&r), 1e-14)
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
        };
        iterations += 1;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &u + &step * lambda;
            if let Ok((rt, tt)) = (shooter.eval)(&trial) {
                if rt.norm() < err {
                    accepted = Some((trial, rt, tt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((nu, nr, nt)) => {
                u = nu;
                err = nr.norm();
                r = nr;
                traj = nt;
            }
            None => break,
        }
    }
    Ok(BvpSolution {
        trajectory: traj,
        unknowns: u.iter().copied().collect(),
        terminal_error: err,
        iterations,
        converged: err <= tol,
    })
}

/// Sphere cubic through `start` and `end`. Unknowns are the frame
/// components of the horizontal parts of `J̇(0)` and `J̈(0)`.
pub fn shoot_sphere(p: &BvpProblem) -> Result<BvpSolution<SphereCubicState>> {
    let BoundaryData::Sphere { start, end } = p.boundary else {
        return Err(Error::WrongSpace("sphere"));
    };
    p.validate()?;
    sphere_log(&end.base, start.base.as_vector())?;
    let (a1, a2) = tangent_frame(&start.base);
    let (b1, b2) = tangent_frame(&end.base);
    let dt = p.effective_dt();
    let eval = move |u: &DVector<f64>| {
        let w2 = a1 * u[0] + a2 * u[1];
        let w3 = a1 * u[2] + a2 * u[3];
        let s0 = project_initial_data(&start.base, &start.v, &w2, &w3)?;
        let traj = integrate(cubic_sphere_rhs, &s0, p.duration, dt)?;
        let last = traj.last();
        let dx = sphere_log(&end.base, last.x.as_vector())?;
        let dv = last.velocity() - end.v;
        let r = DVector::from_vec(vec![dx.dot(&b1), dx.dot(&b2), dv.dot(&b1), dv.dot(&b2)]);
        Ok((r, traj))
    };
    newton(
        &Shooter { eval: Box::new(eval) },
        4,
        p.shooting_tolerance,
        p.max_iterations,
    )
}

/// Initial state of the sphere solution for the given unknowns.
pub fn sphere_initial_state(p: &BvpProblem, unknowns: &[f64]) -> Result<SphereCubicState> {
    let BoundaryData::Sphere { start, .. } = p.boundary else {
        return Err(Error::WrongSpace("sphere"));
    };
    let (a1, a2) = tangent_frame(&start.base);
    project_initial_data(
        &start.base,
        &start.v,
        &(a1 * unknowns[0] + a2 * unknowns[1]),
        &(a1 * unknowns[2] + a2 * unknowns[3]),
    )
}

/// NHP cubic on SO(3) between two group points with given right velocities.
/// Unknowns are `J̇(0)` and `J̈(0)`.
pub fn shoot_group(p: &BvpProblem) -> Result<BvpSolution<NhpState>> {
    let BoundaryData::Group { start, end } = p.boundary else {
        return Err(Error::WrongSpace("group"));
    };
    p.validate()?;
    let target_inv = end.0.inverse();
    let dt = p.effective_dt();
    let eval = move |u: &DVector<f64>| {
        let s0 = NhpState::new(
            start.1,
            Vector3::new(u[0], u[1], u[2]),
            Vector3::new(u[3], u[4], u[5]),
            start.0,
        );
        let traj = integrate(nhp_rhs, &s0, p.duration, dt)?;
        let last = traj.last();
        let dg = log_so3(&target_inv.compose(&last.g))?;
        let dxi = last.j - end.1;
        let r = DVector::from_vec(vec![dg.x, dg.y, dg.z, dxi.x, dxi.y, dxi.z]);
        Ok((r, traj))
    };
    newton(
        &Shooter { eval: Box::new(eval) },
        6,
        p.shooting_tolerance,
        p.max_iterations,
    )
}

/// Shooting settings shared by all segments of a waypoint plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSettings {
    pub shooting_tolerance: f64,
    pub max_iterations: usize,
    pub dt: f64,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            shooting_tolerance: BvpProblem::DEFAULT_TOLERANCE,
            max_iterations: BvpProblem::DEFAULT_MAX_ITERATIONS,
            dt: BvpProblem::DEFAULT_DT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    pub segments: Vec<BvpSolution<SphereCubicState>>,
    /// Position and velocity mismatch at each interior waypoint.
    pub junction_gaps: Vec<(f64, f64)>,
    /// Concatenated samples; junction times appear once.
    pub samples: Vec<(f64, SphereCubicState)>,
}

impl WaypointPlan {
    pub fn to_table(&self) -> Table {
        let mut columns = vec!["t".to_string()];
        columns.extend(SphereCubicState::columns());
        Table {
            flavor: SphereCubicState::FLAVOR.to_string(),
            columns,
            rows: self
                .samples
                .iter()
                .map(|(t, s)| {
                    let mut row = vec![*t];
                    row.extend(s.to_row());
                    row
                })
                .collect(),
        }
    }

    /// Uniform-grid view; fails when segment steps differ.
    pub fn trajectory(&self) -> Result<Trajectory<SphereCubicState>> {
        let times: Vec<f64> = self.samples.iter().map(|(t, _)| *t).collect();
        Trajectory::from_samples(&times, self.samples.iter().map(|(_, s)| *s).collect())
    }
}

/// Solves one sphere problem per consecutive pair of waypoints.
pub fn plan_waypoints(
    points: &[TangentVector],
    durations: &[f64],
    settings: &PlanSettings,
) -> Result<WaypointPlan> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 waypoints, got {}",
            points.len()
        )));
    }
    if durations.len() != points.len() - 1 {
        return Err(Error::InvalidInput(format!(
            "{} waypoints need {} durations, got {}",
            points.len(),
            points.len() - 1,
            durations.len()
        )));
    }
    let mut segments = Vec::with_capacity(durations.len());
    for (index, (pair, &duration)) in points.windows(2).zip(durations).enumerate() {
        let problem = BvpProblem {
            boundary: BoundaryData::Sphere {
                start: pair[0],
                end: pair[1],
            },
            duration,
            shooting_tolerance: settings.shooting_tolerance,
            max_iterations: settings.max_iterations,
            dt: settings.dt,
        };
        let sol = shoot_sphere(&problem)?;
        if !sol.converged {
            return Err(Error::SegmentNotConverged {
                index,
                terminal_error: sol.terminal_error,
            });
        }
        segments.push(sol);
    }
    let mut junction_gaps = Vec::new();
    for w in segments.windows(2) {
        let (a, b) = (w[0].trajectory.last(), w[1].trajectory.first());
        junction_gaps.push((
            (a.x.as_vector() - b.x.as_vector()).norm(),
            (a.velocity() - b.velocity()).norm(),
        ));
    }
    let mut samples = Vec::new();
    let mut offset = 0.0;
    for (k, seg) in segments.iter().enumerate() {
        let tr = &seg.trajectory;
        let skip = usize::from(k > 0);
        for (i, s) in tr.states().iter().enumerate().skip(skip) {
            samples.push((offset + tr.time(i), *s));
        }
        offset += durations[k];
    }
    Ok(WaypointPlan {
        segments,
        junction_gaps,
        samples,
    })
}
