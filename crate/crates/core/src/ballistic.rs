//! Geodesics on SO(3) seen through their projections to S².
//!
//! A group geodesic with right velocity `ξ` splits at `x` into the horizontal
//! generator `J` and the vertical part `σ̄ = σ x`. Both are transported by
//! the geodesic, so `ξ = J + σ̄` stays constant.

use nalgebra::{SVector, Vector3};

use crate::dynamics::{get3, integrate, put3, FlowState};
use crate::error::{Error, Result};
use crate::lie::{bracket, exp_so3, AlgebraVector};
use crate::sphere::{horizontal_generator, OnSphere, SpherePoint};
use crate::trajectory::{check_row_len, push_vector, read_vector, vector_columns, StateRecord, Trajectory};

const INVARIANT_TOL: f64 = 1e-8;
const TRIVIAL_TOL: f64 = 1e-12;
const EQUAL_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallisticState {
    pub x: SpherePoint,
    pub j: AlgebraVector,
    pub sigma: AlgebraVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallisticRate {
    pub dx: Vector3<f64>,
    pub dj: AlgebraVector,
    pub dsigma: AlgebraVector,
}

impl BallisticState {
    /// Requires `J` horizontal and `σ̄` parallel to `x`, each to 1e-8.
    pub fn new(x: SpherePoint, j: AlgebraVector, sigma: AlgebraVector) -> Result<Self> {
        let p = x.as_vector();
        let h = j.dot(p).abs();
        if !(h <= INVARIANT_TOL) {
            return Err(Error::NotHorizontal(h));
        }
        let off = sigma.cross(p).norm();
        if !(off <= INVARIANT_TOL) {
            return Err(Error::InvariantViolation(format!(
                "vertical component is {off:e} off the base point"
            )));
        }
        Ok(Self { x, j, sigma })
    }

    /// State with velocity `v` at `x` and vertical scalar `sigma`.
    pub fn from_velocity(x: &SpherePoint, v: &Vector3<f64>, sigma: f64) -> Result<Self> {
        let j = horizontal_generator(x, v)?;
        Ok(Self {
            x: *x,
            j,
            sigma: x.as_vector() * sigma,
        })
    }

    /// Conserved right velocity `J + σ̄` of the underlying group geodesic.
    pub fn group_velocity(&self) -> AlgebraVector {
        self.j + self.sigma
    }

    pub fn sigma_scalar(&self) -> f64 {
        self.sigma.dot(self.x.as_vector())
    }
}

impl OnSphere for BallisticState {
    fn point(&self) -> Vector3<f64> {
        *self.x.as_vector()
    }
}

impl FlowState for BallisticState {
    type Coords = SVector<f64, 9>;
    type Rate = BallisticRate;

    fn coords(&self) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, self.x.as_vector());
        put3(&mut c, 3, &self.j);
        put3(&mut c, 6, &self.sigma);
        c
    }

    fn from_coords(c: &Self::Coords) -> Self {
        Self {
            x: SpherePoint::from_vector_unchecked(get3(c, 0)),
            j: get3(c, 3),
            sigma: get3(c, 6),
        }
    }

    fn rate_coords(r: &BallisticRate) -> Self::Coords {
        let mut c = SVector::zeros();
        put3(&mut c, 0, &r.dx);
        put3(&mut c, 3, &r.dj);
        put3(&mut c, 6, &r.dsigma);
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

impl StateRecord for BallisticState {
    const FLAVOR: &'static str = "ballistic";

    fn columns() -> Vec<String> {
        [vector_columns("x"), vector_columns("J"), vector_columns("sigma")].concat()
    }

    fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(9);
        push_vector(&mut row, self.x.as_vector());
        push_vector(&mut row, &self.j);
        push_vector(&mut row, &self.sigma);
        row
    }

    fn from_row(row: &[f64]) -> Result<Self> {
        check_row_len(row, 9)?;
        Ok(Self {
            x: SpherePoint::new(read_vector(row, 0))?,
            j: read_vector(row, 3),
            sigma: read_vector(row, 6),
        })
    }
}

/// `(ẋ, J̇, σ̄̇) = (J × x, [σ̄, J], [J, σ̄])`.
pub fn lp1_rhs(s: &BallisticState) -> BallisticRate {
    BallisticRate {
        dx: s.j.cross(s.x.as_vector()),
        dj: bracket(&s.sigma, &s.j),
        dsigma: bracket(&s.j, &s.sigma),
    }
}

pub fn integrate_lp1(
    initial: &BallisticState,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory<BallisticState>> {
    integrate(lp1_rhs, initial, t_final, dt)
}

/// Base curve of the group geodesic, `x(t) = exp(t ξ̂) x(0)`.
pub fn projected_geodesic(initial: &BallisticState, t: f64) -> Vector3<f64> {
    exp_so3(&(initial.group_velocity() * t)).act(initial.x.as_vector())
}

/// Norm of `[σ̄,[σ̄,[σ̄,J]]] + [J,[J,[J,σ̄]]]`; zero iff the projection is a cubic.
pub fn ballistic_cubic_condition(s: &BallisticState) -> f64 {
    let (j, sg) = (&s.j, &s.sigma);
    let a = bracket(sg, &bracket(sg, &bracket(sg, j)));
    let b = bracket(j, &bracket(j, &bracket(j, sg)));
    (a + b).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallisticClass {
    Trivial,
    HorizontalGeodesic,
    EqualNormCircle,
    NonCubic,
}

impl BallisticClass {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Trivial => "trivial",
            Self::HorizontalGeodesic => "horizontal-geodesic",
            Self::EqualNormCircle => "equal-norm-circle",
            Self::NonCubic => "non-cubic",
        }
    }
}

/// Thresholds are absolute: 1e-12 on the norms, 1e-10 on the squared-norm gap.
pub fn classify_s2(s: &BallisticState) -> BallisticClass {
    let (nj, ns) = (s.j.norm(), s.sigma.norm());
    if nj <= TRIVIAL_TOL {
        BallisticClass::Trivial
    } else if ns <= TRIVIAL_TOL {
        BallisticClass::HorizontalGeodesic
    } else if (ns * ns - nj * nj).abs() <= EQUAL_NORM_TOL {
        BallisticClass::EqualNormCircle
    } else {
        BallisticClass::NonCubic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// Rotation axis and radius of the equal-norm circle through `x0` with
/// velocity `v0`.
pub fn circle_parameters(
    x0: &SpherePoint,
    v0: &Vector3<f64>,
    sign: Sign,
) -> Result<(Vector3<f64>, f64)> {
    let j = horizontal_generator(x0, v0)?;
    let speed = j.norm();
    if speed == 0.0 {
        return Err(Error::InvalidInput("zero initial velocity".into()));
    }
    let p = x0.as_vector();
    let axis = (j + p * (sign.value() * speed)).normalize();
    Ok((axis, (p - axis * p.dot(&axis)).norm()))
}

/// Equal-norm initial state: `σ = ±‖v0‖`.
pub fn equal_norm_state(x0: &SpherePoint, v0: &Vector3<f64>, sign: Sign) -> Result<BallisticState> {
    let speed = horizontal_generator(x0, v0)?.norm();
    BallisticState::from_velocity(x0, v0, sign.value() * speed)
}
