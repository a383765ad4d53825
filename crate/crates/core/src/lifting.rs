//! Horizontal lifts of sphere curves and tests for when they are cubics.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::dynamics::{step_count, SphereCubicState};
use crate::error::{Error, Result};
use crate::lie::{bracket, exp_so3, hat, AlgebraVector, GroupElement};
use crate::sphere::{project, SpherePoint};
use crate::trajectory::Trajectory;

const INITIAL_POINT_TOL: f64 = 1e-8;
const HORIZONTAL_TOL: f64 = 1e-8;

/// Quadratic-fit test that a sampled generator lies in an Abelian
/// horizontal subalgebra.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftabilityCertificate {
    /// Fit `J(t) ≈ u t²/2 + v t + w`, with `t` measured from the first sample.
    pub u: AlgebraVector,
    pub v: AlgebraVector,
    pub w: AlgebraVector,
    /// `‖[u,v]‖, ‖[u,w]‖, ‖[v,w]‖`.
    pub commutator_norms: [f64; 3],
    /// `|u·x0|, |v·x0|, |w·x0|`.
    pub horizontality_defects: [f64; 3],
    /// Largest pointwise deviation of the samples from the fit.
    pub fit_residual: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateTolerances {
    pub commutator: f64,
    pub horizontality: f64,
    pub fit: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            commutator: 1e-8,
            horizontality: 1e-8,
            fit: 1e-6,
        }
    }
}

/// Generator value halfway between samples `k` and `k + 1`, by cubic
/// interpolation when four samples are available.
fn midpoint(js: &[AlgebraVector], k: usize) -> AlgebraVector {
    let n = js.len();
    if n < 4 {
        return (js[k] + js[k + 1]) * 0.5;
    }
    if k == 0 {
        (js[0] * 5.0 + js[1] * 15.0 - js[2] * 5.0 + js[3]) / 16.0
    } else if k + 2 == n {
        (js[k - 2] - js[k - 1] * 5.0 + js[k] * 15.0 + js[k + 1] * 5.0) / 16.0
    } else {
        (-js[k - 1] + js[k] * 9.0 + js[k + 1] * 9.0 - js[k + 2]) / 16.0
    }
}

/// Integrates `ġ = Ĵ(t) g` from `g0` over the grid of `jbar`. `x0` is the
/// initial point of the base curve, which `g0` must project to.
pub fn horizontal_lift(
    jbar: &Trajectory<AlgebraVector>,
    g0: &GroupElement,
    x0: &SpherePoint,
) -> Result<Trajectory<GroupElement>> {
    let gap = (project(g0).as_vector() - x0.as_vector()).norm();
    if !(gap <= INITIAL_POINT_TOL) {
        return Err(Error::MismatchedInitialPoint(gap));
    }
    let js = jbar.states();
    let h = jbar.dt();
    let mut out = Vec::with_capacity(js.len());
    out.push(*g0);
    for k in 0..js.len() - 1 {
        let g = *out[k].matrix();
        let (a, m, b) = (hat(&js[k]), hat(&midpoint(js, k)), hat(&js[k + 1]));
        let k1 = a * g;
        let k2 = m * (g + k1 * (0.5 * h));
        let k3 = m * (g + k2 * (0.5 * h));
        let k4 = b * (g + k3 * h);
        let next: Matrix3<f64> = g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let next = GroupElement::from_matrix_unchecked(next).reprojected();
        if !next.matrix().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                t_last: jbar.time(k),
            });
        }
        out.push(next);
    }
    Trajectory::new(jbar.t0(), h, out)
}

/// Lifts the base curve of a sphere cubic trajectory through `g0`.
pub fn lift_sphere_cubic(
    traj: &Trajectory<SphereCubicState>,
    g0: &GroupElement,
) -> Result<Trajectory<GroupElement>> {
    horizontal_lift(&traj.map(|s| s.j), g0, &traj.first().x)
}

/// Vertical part `|(g⁻¹ ġ)·e_z| = |J·x|` of the lift's body velocity at each sample.
pub fn lift_horizontality_defects(
    lift: &Trajectory<GroupElement>,
    jbar: &Trajectory<AlgebraVector>,
) -> Vec<f64> {
    lift.states()
        .iter()
        .zip(jbar.states())
        .map(|(g, j)| {
            let body = g.inverse().act(j);
            body.z.abs()
        })
        .collect()
}

/// Magnitude of the vertical part of `[J, J̇]` at the state's base point.
pub fn lift_obstruction(s: &SphereCubicState) -> f64 {
    bracket(&s.j, &s.j1).dot(s.x.as_vector()).abs()
}

/// Least-squares quadratic fit of the generator with default tolerances.
pub fn liftability_certificate(
    traj: &Trajectory<SphereCubicState>,
) -> Result<LiftabilityCertificate> {
    liftability_certificate_with(traj, &CertificateTolerances::default())
}

pub fn liftability_certificate_with(
    traj: &Trajectory<SphereCubicState>,
    tol: &CertificateTolerances,
) -> Result<LiftabilityCertificate> {
    const MIN: usize = 5;
    let n = traj.len();
    if n < MIN {
        return Err(Error::TooFewSamples {
            required: MIN,
            got: n,
        });
    }
    let design = DMatrix::from_fn(n, 3, |k, c| {
        let t = k as f64 * traj.dt();
        match c {
            0 => 0.5 * t * t,
            1 => t,
            _ => 1.0,
        }
    });
    let rhs = DMatrix::from_fn(n, 3, |k, c| traj.states()[k].j[c]);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let row = |r: usize| Vector3::new(coef[(r, 0)], coef[(r, 1)], coef[(r, 2)]);
    let (u, v, w) = (row(0), row(1), row(2));
    let fitted = &design * &coef;
    let fit_residual = (fitted - rhs).amax();
    let x0 = traj.first().x.as_vector();
    let commutator_norms = [
        bracket(&u, &v).norm(),
        bracket(&u, &w).norm(),
        bracket(&v, &w).norm(),
    ];
    let horizontality_defects = [u.dot(x0).abs(), v.dot(x0).abs(), w.dot(x0).abs()];
    let verdict = commutator_norms.iter().all(|c| *c <= tol.commutator)
        && horizontality_defects.iter().all(|d| *d <= tol.horizontality)
        && fit_residual <= tol.fit;
    Ok(LiftabilityCertificate {
        u,
        v,
        w,
        commutator_norms,
        horizontality_defects,
        fit_residual,
        verdict,
    })
}

/// Parameters of the curve `exp((a t³/6 + b t²/2 + c t) d̂) q0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftableCubic {
    pub q0: SpherePoint,
    pub d: AlgebraVector,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LiftableCubic {
    pub fn new(q0: SpherePoint, d: AlgebraVector, a: f64, b: f64, c: f64) -> Result<Self> {
        if d.norm() == 0.0 || !d.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("axis d must be nonzero".into()));
        }
        let defect = d.dot(q0.as_vector()).abs();
        if !(defect <= HORIZONTAL_TOL) {
            return Err(Error::NotHorizontal(defect));
        }
        if ![a, b, c].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(Self { q0, d, a, b, c })
    }

    fn phase(&self, t: f64) -> [f64; 4] {
        let (a, b, c) = (self.a, self.b, self.c);
        [
            a * t.powi(3) / 6.0 + b * t * t / 2.0 + c * t,
            a * t * t / 2.0 + b * t + c,
            a * t + b,
            a,
        ]
    }

    /// Exact sphere cubic state at time `t`.
    pub fn state(&self, t: f64) -> SphereCubicState {
        let [p, p1, p2, p3] = self.phase(t);
        let x = exp_so3(&(self.d * p)).act(self.q0.as_vector());
        SphereCubicState {
            x: SpherePoint::from_vector_unchecked(x),
            j: self.d * p1,
            j1: self.d * p2,
            j2: self.d * p3,
        }
    }

    pub fn states(&self, t_final: f64, dt: f64) -> Result<Trajectory<SphereCubicState>> {
        let steps = step_count(t_final, dt)?;
        let states = (0..=steps).map(|k| self.state(k as f64 * dt)).collect();
        Trajectory::new(0.0, dt, states)
    }
}

/// Closed-form sample of a cubic whose horizontal lift is also a cubic.
pub fn liftable_cubic(
    q0: &SpherePoint,
    d: &AlgebraVector,
    a: f64,
    b: f64,
    c: f64,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory<SpherePoint>> {
    let curve = LiftableCubic::new(*q0, *d, a, b, c)?;
    Ok(curve.states(t_final, dt)?.map(|s| s.x))
}
