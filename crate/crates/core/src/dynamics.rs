//! Cubic and geodesic flows and a fixed-step RK4 integrator.
//!
//! Group factors are advanced by the right-invariant reconstruction
//! `ġ = ξ̂ g` and re-projected onto SO(3) after every step; sphere points
//! are renormalized. Constraint-carrying states are otherwise left alone,
//! so drift in their invariants measures the integrator.

use std::ops::{Add, Mul};

use nalgebra::{Matrix3, SVector, Vector3};

use crate::error::{Error, Result};
use crate::lie::{ad_dagger, ad_star, bracket, hat, AlgebraVector, Covector, GroupElement, MetricTensor};
use crate::sphere::{horizontal_generator, split, OnSphere, SpherePoint};
use crate::trajectory::{
    check_row_len, matrix_columns, push_matrix, push_vector, read_matrix, read_vector,
    vector_columns, StateRecord, Trajectory,
};

const INVARIANT_TOL: f64 = 1e-8;

/// A state that RK4 can advance through flat coordinates.
pub trait FlowState: Clone {
    type Coords: Copy + Add<Output = Self::Coords> + Mul<f64, Output = Self::Coords>;
    type Rate;

    fn coords(&self) -> Self::Coords;

    /// Rebuilds a state without validation (used for intermediate stages).
    fn from_coords(c: &Self::Coords) -> Self;

    fn rate_coords(rate: &Self::Rate) -> Self::Coords;

    /// Pulls manifold-valued components back onto their manifolds.
    fn reproject(&self) -> Self;

    fn is_finite(&self) -> bool;
}

pub(crate) fn put3<const N: usize>(c: &mut SVector<f64, N>, at: usize, v: &Vector3<f64>) {
    c.fixed_rows_mut::<3>(at).copy_from(v);
}

pub(crate) fn put9<const N: usize>(c: &mut SVector<f64, N>, at: usize, m: &Matrix3<f64>) {
    for i in 0..3 {
        for j in 0..3 {
            c[at + 3 * i + j] = m[(i, j)];
        }
    }
}

pub(crate) fn get3<const N: usize>(c: &SVector<f64, N>, at: usize) -> Vector3<f64> {
    c.fixed_rows::<3>(at).into_owned()
}

pub(crate) fn get9<const N: usize>(c: &SVector<f64, N>, at: usize) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| c[at + 3 * i + j])
}

/// One classical Runge-Kutta step followed by re-projection.
pub fn rk4_step<S: FlowState>(rhs: &impl Fn(&S) -> S::Rate, s: &S, h: f64) -> S {
    let c0 = s.coords();
    let k1 = S::rate_coords(&rhs(s));
    let k2 = S::rate_coords(&rhs(&S::from_coords(&(c0 + k1 * (0.5 * h)))));
    let k3 = S::rate_coords(&rhs(&S::from_coords(&(c0 + k2 * (0.5 * h)))));
    let k4 = S::rate_coords(&rhs(&S::from_coords(&(c0 + k3 * h))));
    let c1 = c0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    S::from_coords(&c1).reproject()
}

/// Number of steps taken for a run to `t_final` at step `dt`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStep(format!("dt must be positive, got {dt}")));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidStep(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    let steps = (t_final / dt + 1e-9).floor();
    if steps < 1.0 {
        return Err(Error::InvalidStep(format!("dt = {dt} exceeds t_final = {t_final}")));
    }
    Ok(steps as usize)
}

/// Integrates from t = 0, recording every step: `1 + floor(t_final / dt)`
/// samples.
pub fn integrate<S: FlowState>(
    rhs: impl Fn(&S) -> S::Rate,
    initial: &S,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory<S>> {
    let steps = step_count(t_final, dt)?;
    if !initial.is_finite() {
        return Err(Error::NonFinite { t_last: f64::NAN });
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    for k in 0..steps {
        let next = rk4_step(&rhs, &states[k], dt);
        if !next.is_finite() {
            return Err(Error::NonFinite {
                t_last: k as f64 * dt,
            });
        }
        states.push(next);
    }
    Trajectory::new(0.0, dt, states)
}

/// Generator jet on a bi-invariant group: `J, J̇, J̈` and the group point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NhpState {
    pub j: AlgebraVector,
    pub j1: AlgebraVector,
    pub j2: AlgebraVector,
    pub g: GroupElement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NhpRate {
    pub dj: AlgebraVector,
    pub dj1: AlgebraVector,
    pub dj2: AlgebraVector,
    pub dg: Matrix3<f64>,
}

impl NhpState {
    pub fn new(j: AlgebraVector, j1: AlgebraVector, j2: AlgebraVector, g: GroupElement) -> Self {
        Self { j, j1, j2, g }
    }
}

impl FlowState for NhpState {
    type Coords = SVector<f64, 18>;
    type Rate = NhpRate;

    fn coords(&self) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, &self.j);
        put3(&mut c, 3, &self.j1);
        put3(&mut c, 6, &self.j2);
        put9(&mut c, 9, self.g.matrix());
        c
    }

    fn from_coords(c: &Self::Coords) -> Self {
        Self {
            j: get3(c, 0),
            j1: get3(c, 3),
            j2: get3(c, 6),
            g: GroupElement::from_matrix_unchecked(get9(c, 9)),
        }
    }

    fn rate_coords(r: &NhpRate) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, &r.dj);
        put3(&mut c, 3, &r.dj1);
        put3(&mut c, 6, &r.dj2);
        put9(&mut c, 9, &r.dg);
        c
    }

    fn reproject(&self) -> Self {
        Self {
            g: self.g.reprojected(),
            ..*self
        }
    }

    fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }
}

impl StateRecord for NhpState {
    const FLAVOR: &'static str = "nhp";

    fn columns() -> Vec<String> {
        [
            vector_columns("J"),
            vector_columns("Jd"),
            vector_columns("Jdd"),
            matrix_columns("g"),
        ]
        .concat()
    }

    fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(18);
        push_vector(&mut row, &self.j);
        push_vector(&mut row, &self.j1);
        push_vector(&mut row, &self.j2);
        push_matrix(&mut row, self.g.matrix());
        row
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        check_row_len(row, 18)?;
        Ok(Self::new(
            read_vector(row, 0),
            read_vector(row, 3),
            read_vector(row, 6),
            GroupElement::new(read_matrix(row, 9))?,
        ))
    }
}

/// Right-hand side of the NHP system `J⃛ = J × J̈` with reconstruction.
pub fn nhp_rhs(s: &NhpState) -> NhpRate {
    NhpRate {
        dj: s.j1,
        dj1: s.j2,
        dj2: bracket(&s.j, &s.j2),
        dg: hat(&s.j) * s.g.matrix(),
    }
}

/// Lie quadratic `J̈ + [J̇, J]`, a first integral of the NHP flow.
pub fn lie_quadratic(s: &NhpState) -> AlgebraVector {
    s.j2 + bracket(&s.j1, &s.j)
}

/// State of the group cubic flow for a general right-invariant metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ep2State {
    pub xi: AlgebraVector,
    pub eta: AlgebraVector,
    pub m: Covector,
    pub g: GroupElement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ep2Rate {
    pub dxi: AlgebraVector,
    pub deta: AlgebraVector,
    pub dm: Covector,
    pub dg: Matrix3<f64>,
}

impl Ep2State {
    pub fn new(xi: AlgebraVector, eta: AlgebraVector, m: Covector, g: GroupElement) -> Self {
        Self { xi, eta, m, g }
    }

    /// Converts the jet `(ξ, ξ̇, ξ̈)` into `(ξ, η, m)` for the metric `I`.
    pub fn from_jet(
        xi: AlgebraVector,
        xi_dot: AlgebraVector,
        xi_ddot: AlgebraVector,
        g: GroupElement,
        metric: &MetricTensor,
    ) -> Self {
        let eta = xi_dot + ad_dagger(&xi, &xi, metric);
        let eta_dot = xi_ddot + ad_dagger(&xi_dot, &xi, metric) + ad_dagger(&xi, &xi_dot, metric);
        let m = metric.flat(&eta_dot) - metric.flat(&bracket(&xi, &eta))
            + ad_star(&eta, &metric.flat(&xi));
        Self { xi, eta, m, g }
    }

    /// Matched data for the NHP state under the bi-invariant metric.
    pub fn from_nhp(s: &NhpState) -> Self {
        Self::from_jet(s.j, s.j1, s.j2, s.g, &MetricTensor::identity())
    }
}

impl FlowState for Ep2State {
    type Coords = SVector<f64, 18>;
    type Rate = Ep2Rate;

    fn coords(&self) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, &self.xi);
        put3(&mut c, 3, &self.eta);
        put3(&mut c, 6, &self.m);
        put9(&mut c, 9, self.g.matrix());
        c
    }

    fn from_coords(c: &Self::Coords) -> Self {
        Self {
            xi: get3(c, 0),
            eta: get3(c, 3),
            m: get3(c, 6),
            g: GroupElement::from_matrix_unchecked(get9(c, 9)),
        }
    }

    fn rate_coords(r: &Ep2Rate) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, &r.dxi);
        put3(&mut c, 3, &r.deta);
        put3(&mut c, 6, &r.dm);
        put9(&mut c, 9, &r.dg);
        c
    }

    fn reproject(&self) -> Self {
        Self {
            g: self.g.reprojected(),
            ..*self
        }
    }

    fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }
}

impl StateRecord for Ep2State {
    const FLAVOR: &'static str = "ep2";

    fn columns() -> Vec<String> {
        [
            vector_columns("xi"),
            vector_columns("eta"),
            vector_columns("m"),
            matrix_columns("g"),
        ]
        .concat()
    }

    fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(18);
        push_vector(&mut row, &self.xi);
        push_vector(&mut row, &self.eta);
        push_vector(&mut row, &self.m);
        push_matrix(&mut row, self.g.matrix());
        row
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        check_row_len(row, 18)?;
        Ok(Self::new(
            read_vector(row, 0),
            read_vector(row, 3),
            read_vector(row, 6),
            GroupElement::new(read_matrix(row, 9))?,
        ))
    }
}

/// Right-hand side of the second-order Euler-Poincaré system.
pub fn ep2_rhs(s: &Ep2State, metric: &MetricTensor) -> Ep2Rate {
    let xi_flat = metric.flat(&s.xi);
    Ep2Rate {
        dxi: s.eta - ad_dagger(&s.xi, &s.xi, metric),
        deta: metric.sharp(
            &(s.m + metric.flat(&bracket(&s.xi, &s.eta)) - ad_star(&s.eta, &xi_flat)),
        ),
        dm: -ad_star(&s.xi, &s.m),
        dg: hat(&s.xi) * s.g.matrix(),
    }
}

/// Sphere point with the horizontal generator and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCubicState {
    pub x: SpherePoint,
    pub j: AlgebraVector,
    pub j1: AlgebraVector,
    pub j2: AlgebraVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCubicRate {
    pub dx: Vector3<f64>,
    pub dj: AlgebraVector,
    pub dj1: AlgebraVector,
    pub dj2: AlgebraVector,
}

/// Defects `|J·x|`, `|J̇·x|`, `|(J̈ + [J̇, J])·x|`.
pub fn horizontality_defects(s: &SphereCubicState) -> [f64; 3] {
    let x = s.x.as_vector();
    [
        s.j.dot(x).abs(),
        s.j1.dot(x).abs(),
        (s.j2 + bracket(&s.j1, &s.j)).dot(x).abs(),
    ]
}

impl SphereCubicState {
    /// Validates the three horizontality constraints to 1e-8.
    pub fn new(
        x: SpherePoint,
        j: AlgebraVector,
        j1: AlgebraVector,
        j2: AlgebraVector,
    ) -> Result<Self> {
        let s = Self { x, j, j1, j2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let d = horizontality_defects(self);
        let names = ["J", "J'", "J'' + [J', J]"];
        for (name, v) in names.iter().zip(d) {
            if !(v <= INVARIANT_TOL) {
                return Err(Error::InvariantViolation(format!(
                    "vertical part of {name} is {v:e}"
                )));
            }
        }
        Ok(())
    }

    /// Velocity `J × x` of the base curve.
    pub fn velocity(&self) -> Vector3<f64> {
        self.j.cross(self.x.as_vector())
    }
}

impl OnSphere for SphereCubicState {
    fn point(&self) -> Vector3<f64> {
        *self.x.as_vector()
    }
}

impl FlowState for SphereCubicState {
    type Coords = SVector<f64, 12>;
    type Rate = SphereCubicRate;

    fn coords(&self) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, self.x.as_vector());
        put3(&mut c, 3, &self.j);
        put3(&mut c, 6, &self.j1);
        put3(&mut c, 9, &self.j2);
        c
    }

    fn from_coords(c: &Self::Coords) -> Self {
        Self {
            x: SpherePoint::from_vector_unchecked(get3(c, 0)),
            j: get3(c, 3),
            j1: get3(c, 6),
            j2: get3(c, 9),
        }
    }

    fn rate_coords(r: &SphereCubicRate) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, &r.dx);
        put3(&mut c, 3, &r.dj);
        put3(&mut c, 6, &r.dj1);
        put3(&mut c, 9, &r.dj2);
        c
    }

    fn reproject(&self) -> Self {
        Self {
            x: SpherePoint::from_vector_unchecked(self.x.as_vector().normalize()),
            ..*self
        }
    }

    fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }
}

impl StateRecord for SphereCubicState {
    const FLAVOR: &'static str = "sphere-cubic";

    fn columns() -> Vec<String> {
        [
            vector_columns("x"),
            vector_columns("J"),
            vector_columns("Jd"),
            vector_columns("Jdd"),
        ]
        .concat()
    }

    fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(12);
        push_vector(&mut row, self.x.as_vector());
        push_vector(&mut row, &self.j);
        push_vector(&mut row, &self.j1);
        push_vector(&mut row, &self.j2);
        row
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        check_row_len(row, 12)?;
        Ok(Self {
            x: SpherePoint::new(read_vector(row, 0))?,
            j: read_vector(row, 3),
            j1: read_vector(row, 6),
            j2: read_vector(row, 9),
        })
    }
}

/// Right-hand side of the sphere cubic system `J⃛ = 2 J × J̈`, `ẋ = J × x`.
pub fn cubic_sphere_rhs(s: &SphereCubicState) -> SphereCubicRate {
    SphereCubicRate {
        dx: s.j.cross(s.x.as_vector()),
        dj: s.j1,
        dj1: s.j2,
        dj2: 2.0 * bracket(&s.j, &s.j2),
    }
}

/// Builds a consistent sphere cubic state from position, velocity and two
/// free ambient vectors: `J = x × v`, `J̇` is the horizontal part of `w2`,
/// and `J̈` is the horizontal part of `w3` plus the vertical part that
/// cancels the one of `[J̇, J]`.
pub fn project_initial_data(
    x: &SpherePoint,
    v: &Vector3<f64>,
    w2: &Vector3<f64>,
    w3: &Vector3<f64>,
) -> Result<SphereCubicState> {
    let j = horizontal_generator(x, v)?;
    let (j1, _) = split(w2, x);
    let (h3, _) = split(w3, x);
    let j2 = h3 - x.as_vector() * bracket(&j1, &j).dot(x.as_vector());
    Ok(SphereCubicState { x: *x, j, j1, j2 })
}

pub fn integrate_nhp(initial: &NhpState, t_final: f64, dt: f64) -> Result<Trajectory<NhpState>> {
    integrate(nhp_rhs, initial, t_final, dt)
}

pub fn integrate_ep2(
    initial: &Ep2State,
    metric: &MetricTensor,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory<Ep2State>> {
    integrate(|s: &Ep2State| ep2_rhs(s, metric), initial, t_final, dt)
}

/// Validates the initial horizontality constraints, then integrates.
pub fn integrate_cubic_sphere(
    initial: &SphereCubicState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory<SphereCubicState>> {
    initial.validate()?;
    integrate(cubic_sphere_rhs, initial, t_final, dt)
}
