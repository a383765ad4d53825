//! The round sphere S² = SO(3)/SO(2) with anchor point e_z.
//!
//! Tangent vectors are ambient 3-vectors orthogonal to the base point. The
//! isotropy algebra at `x` is the line spanned by `x`; its orthogonal
//! complement is the horizontal space.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::lie::{bracket, exp_so3, AlgebraVector, GroupElement};
use crate::stencil::{self, MIN_SAMPLES};
use crate::trajectory::Trajectory;

const UNIT_TOL: f64 = 1e-10;
const TANGENT_TOL: f64 = 1e-8;
const HORIZONTAL_TOL: f64 = 1e-8;

/// Unit vector in R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    x: Vector3<f64>,
}

impl SpherePoint {
    /// Accepts `x` with `| |x| - 1 | <= 1e-10`.
    pub fn new(x: Vector3<f64>) -> Result<Self> {
        let defect = (x.norm() - 1.0).abs();
        if !(defect <= UNIT_TOL) {
            return Err(Error::NotUnit(defect));
        }
        Ok(Self { x })
    }

    /// Normalizes any nonzero finite vector.
    pub fn normalized(x: Vector3<f64>) -> Result<Self> {
        let n = x.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotUnit(f64::INFINITY));
        }
        Ok(Self { x: x / n })
    }

    /// The anchor point e_z.
    pub fn anchor() -> Self {
        Self { x: Vector3::z() }
    }

    pub(crate) fn from_vector_unchecked(x: Vector3<f64>) -> Self {
        Self { x }
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.x
    }

    pub fn rotated(&self, g: &GroupElement) -> Self {
        Self { x: g.act(&self.x) }
    }
}

/// Ambient vector tangent to the sphere at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: SpherePoint,
    pub v: Vector3<f64>,
}

impl TangentVector {
    /// Removes a normal component up to 1e-8; rejects anything larger.
    pub fn new(base: SpherePoint, v: Vector3<f64>) -> Result<Self> {
        let x = base.as_vector();
        let normal = x.dot(&v);
        if !(normal.abs() <= TANGENT_TOL) {
            return Err(Error::NotTangent(normal.abs()));
        }
        Ok(Self {
            base,
            v: v - x * normal,
        })
    }

    pub fn zero(base: SpherePoint) -> Self {
        Self {
            base,
            v: Vector3::zeros(),
        }
    }
}

/// Points whose trajectories can be checked on the sphere.
pub trait OnSphere {
    fn point(&self) -> Vector3<f64>;
}

impl OnSphere for SpherePoint {
    fn point(&self) -> Vector3<f64> {
        self.x
    }
}

impl OnSphere for Vector3<f64> {
    fn point(&self) -> Vector3<f64> {
        *self
    }
}

/// Bundle projection `g -> g e_z`.
pub fn project(g: &GroupElement) -> SpherePoint {
    SpherePoint {
        x: g.matrix().column(2).into_owned(),
    }
}

/// Infinitesimal generator `xi x`.
pub fn generator(xi: &AlgebraVector, x: &SpherePoint) -> TangentVector {
    TangentVector {
        base: *x,
        v: xi.cross(&x.x),
    }
}

/// Horizontal and vertical parts of `xi` at `x`.
pub fn split(xi: &AlgebraVector, x: &SpherePoint) -> (AlgebraVector, AlgebraVector) {
    let vertical = x.x * xi.dot(&x.x);
    (xi - vertical, vertical)
}

/// Unique horizontal generator `x × v` of the tangent vector `v`.
pub fn horizontal_generator(x: &SpherePoint, v: &Vector3<f64>) -> Result<AlgebraVector> {
    let t = TangentVector::new(*x, *v)?;
    Ok(x.x.cross(&t.v))
}

/// Levi-Civita derivative of a tangent field `v` along a curve through `x`,
/// given the ambient derivative `dv`.
pub fn covariant_derivative(
    x: &SpherePoint,
    v: &Vector3<f64>,
    dv: &Vector3<f64>,
) -> Result<TangentVector> {
    TangentVector::new(*x, *v)?;
    let p = x.x;
    Ok(TangentVector {
        base: *x,
        v: dv - p * dv.dot(&p),
    })
}

/// Curvature `R(eta_Q, xi_Q) xi_Q` at `x` for horizontal `xi`, `eta`.
pub fn curvature_sphere(
    xi: &AlgebraVector,
    eta: &AlgebraVector,
    x: &SpherePoint,
) -> Result<TangentVector> {
    for v in [xi, eta] {
        let d = v.dot(&x.x).abs();
        if !(d <= HORIZONTAL_TOL) {
            return Err(Error::NotHorizontal(d));
        }
    }
    let w = -bracket(xi, &bracket(xi, eta));
    Ok(generator(&w, x))
}

/// Sectional curvature of the plane spanned by the generated vectors.
pub fn sectional_curvature_sphere(
    xi: &AlgebraVector,
    eta: &AlgebraVector,
    x: &SpherePoint,
) -> Result<f64> {
    let r = curvature_sphere(xi, eta, x)?;
    let a = generator(xi, x).v;
    let b = generator(eta, x).v;
    let area2 = a.norm_squared() * b.norm_squared() - a.dot(&b).powi(2);
    if !(area2 > 0.0) {
        return Err(Error::InvalidInput("degenerate plane".into()));
    }
    Ok(r.v.dot(&b) / area2)
}

/// Rotation about `a × b` taking `a` to `b`. Antipodal pairs use a half
/// turn about an axis orthogonal to `a`.
pub fn rotation_between(a: &SpherePoint, b: &SpherePoint) -> GroupElement {
    let (a, b) = (a.as_vector(), b.as_vector());
    let axis = a.cross(b);
    let s = axis.norm();
    if s > 1e-12 {
        return exp_so3(&(axis / s * s.atan2(a.dot(b))));
    }
    if a.dot(b) > 0.0 {
        return GroupElement::identity();
    }
    let perp = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    exp_so3(&(a.cross(&perp).normalize() * std::f64::consts::PI))
}

/// Residual series of the sphere cubic equation at interior sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vector3<f64>>,
}

impl ResidualSeries {
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Evaluates `x × (J⃛ + 2 J̈ × J)` with `J = x × ẋ`, where every derivative
/// of `x` comes from the shared fourth-order stencils.
pub fn cubic_residual_sphere<P: OnSphere>(traj: &Trajectory<P>) -> Result<ResidualSeries> {
    let n = traj.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            got: n,
        });
    }
    let h = traj.dt();
    let xs: Vec<Vector3<f64>> = traj.states().iter().map(OnSphere::point).collect();
    let mut out = ResidualSeries {
        times: Vec::new(),
        values: Vec::new(),
    };
    for i in stencil::interior(n) {
        let d: [Vector3<f64>; 5] = std::array::from_fn(|k| stencil::derivative(&xs, i, k, h));
        let j0 = d[0].cross(&d[1]);
        let j2 = d[1].cross(&d[2]) + d[0].cross(&d[3]);
        let j3 = 2.0 * d[1].cross(&d[3]) + d[0].cross(&d[4]);
        out.times.push(traj.time(i));
        out.values.push(d[0].cross(&(j3 + 2.0 * j2.cross(&j0))));
    }
    Ok(out)
}
