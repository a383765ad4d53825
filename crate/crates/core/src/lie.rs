//! so(3) / SO(3) primitives.
//!
//! The Lie algebra so(3) is identified with R³ through the hat map, under
//! which the matrix commutator becomes the cross product. Covectors in
//! so(3)* are also stored as 3-vectors, paired with algebra elements by the
//! Euclidean dot product. Inner products on the algebra are carried by a
//! [`MetricTensor`]; the identity tensor gives the bi-invariant metric.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Coefficients of an so(3) element in the basis dual to the hat map.
pub type AlgebraVector = Vector3<f64>;

/// Element of so(3)*, paired with [`AlgebraVector`] by the dot product.
pub type Covector = Vector3<f64>;

const ANTISYMMETRY_TOL: f64 = 1e-12;
const METRIC_SYMMETRY_TOL: f64 = 1e-14;
const ROTATION_TOL: f64 = 1e-10;
const SMALL_ANGLE: f64 = 1e-8;

/// Hat map: `hat(v) * w == v.cross(&w)`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds 1e-12.
pub fn vee(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let sym = (m + m.transpose()).norm() * 0.5;
    if sym > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric(sym));
    }
    Ok(vee_unchecked(m))
}

/// Reads the antisymmetric part of `m` without validation.
pub(crate) fn vee_unchecked(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Lie bracket on so(3).
#[inline]
pub fn bracket(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
    xi.cross(eta)
}

/// Coadjoint action, `<ad*_xi mu, eta> = <mu, [xi, eta]>`.
///
/// The coadjoint action does not depend on the inner product, so no metric
/// is taken here.
#[inline]
pub fn ad_star(xi: &AlgebraVector, mu: &Covector) -> Covector {
    mu.cross(xi)
}

/// Metric adjoint `ad†_nu kappa = (ad*_nu kappa♭)♯`.
pub fn ad_dagger(nu: &AlgebraVector, kappa: &AlgebraVector, metric: &MetricTensor) -> AlgebraVector {
    metric.sharp(&ad_star(nu, &metric.flat(kappa)))
}

/// Symmetric positive-definite inner product on so(3), `<xi, eta> = (I xi) . eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    matrix: Matrix3<f64>,
    inverse: Matrix3<f64>,
}

impl MetricTensor {
    /// Validates symmetry (1e-14) and positive definiteness (Cholesky).
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidMetric("non-finite entry".into()));
        }
        let asym = (matrix - matrix.transpose()).amax();
        if asym > METRIC_SYMMETRY_TOL {
            return Err(Error::InvalidMetric(format!("asymmetry {asym:e}")));
        }
        let chol = matrix
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("not positive definite".into()))?;
        Ok(Self {
            matrix,
            inverse: chol.inverse(),
        })
    }

    /// Builds the tensor from its upper triangle `[i11, i12, i13, i22, i23, i33]`.
    pub fn from_upper(u: [f64; 6]) -> Result<Self> {
        Self::new(Matrix3::new(
            u[0], u[1], u[2], //
            u[1], u[3], u[4], //
            u[2], u[4], u[5],
        ))
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::from(d)))
    }

    /// The bi-invariant metric.
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
            inverse: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        (self.matrix - Matrix3::identity()).amax() <= METRIC_SYMMETRY_TOL
    }

    #[inline]
    pub fn flat(&self, xi: &AlgebraVector) -> Covector {
        self.matrix * xi
    }

    #[inline]
    pub fn sharp(&self, mu: &Covector) -> AlgebraVector {
        self.inverse * mu
    }

    #[inline]
    pub fn inner(&self, xi: &AlgebraVector, eta: &AlgebraVector) -> f64 {
        self.flat(xi).dot(eta)
    }
}

/// Rotation matrix representing an element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    mat: Matrix3<f64>,
}

impl GroupElement {
    /// Accepts `mat` if it is orthonormal within 1e-10 with positive determinant.
    pub fn new(mat: Matrix3<f64>) -> Result<Self> {
        let defect = (mat * mat.transpose() - Matrix3::identity()).amax();
        let det = mat.determinant();
        if !(defect <= ROTATION_TOL) || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotRotation { defect, det });
        }
        Ok(Self { mat })
    }

    pub fn identity() -> Self {
        Self {
            mat: Matrix3::identity(),
        }
    }

    /// Wraps a matrix that may be slightly off SO(3) (integrator stages).
    pub(crate) fn from_matrix_unchecked(mat: Matrix3<f64>) -> Self {
        Self { mat }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.mat
    }

    /// Nearest rotation in the Frobenius norm (polar factor).
    pub fn reprojected(&self) -> Self {
        let svd = self.mat.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Self { mat: r }
    }

    /// Largest entry of `g gᵀ - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.mat * self.mat.transpose() - Matrix3::identity()).amax()
    }

    pub fn inverse(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    pub fn compose(&self, other: &GroupElement) -> Self {
        Self {
            mat: self.mat * other.mat,
        }
    }

    pub fn act(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.mat * v
    }
}

/// Rodrigues formula, with a Taylor expansion below 1e-8 rad.
pub fn exp_so3(xi: &AlgebraVector) -> GroupElement {
    let theta = xi.norm();
    let k = hat(xi);
    let k2 = k * k;
    let (a, b) = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    GroupElement {
        mat: Matrix3::identity() + k * a + k2 * b,
    }
}

/// Principal logarithm, valid for rotation angles below `pi - 1e-6`.
pub fn log_so3(g: &GroupElement) -> Result<AlgebraVector> {
    let m = g.matrix();
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let axis2sin = vee_unchecked(m) * 2.0;
    let sin = axis2sin.norm() * 0.5;
    let theta = sin.atan2(cos);
    if theta > std::f64::consts::PI - 1e-6 {
        return Err(Error::ChartFailure(format!(
            "rotation angle {theta} too close to pi for the logarithm"
        )));
    }
    if theta < SMALL_ANGLE {
        return Ok(axis2sin * (0.5 + theta * theta / 12.0));
    }
    Ok(axis2sin * (theta / (2.0 * sin)))
}

/// Adjoint action `Ad_g xi`, which on so(3) ≅ R³ is the rotation itself.
#[inline]
pub fn adjoint(g: &GroupElement, xi: &AlgebraVector) -> AlgebraVector {
    g.mat * xi
}

/// Right-trivialized curvature `R(eta, xi) xi = -1/4 [xi, [xi, eta]]` for the
/// bi-invariant metric.
pub fn curvature_group(
    xi: &AlgebraVector,
    eta: &AlgebraVector,
    metric: &MetricTensor,
) -> Result<AlgebraVector> {
    if !metric.is_identity() {
        return Err(Error::NotBiInvariant);
    }
    Ok(-0.25 * bracket(xi, &bracket(xi, eta)))
}

/// Sectional curvature of the plane spanned by `xi`, `eta` under the
/// bi-invariant metric.
pub fn sectional_curvature_group(xi: &AlgebraVector, eta: &AlgebraVector) -> Result<f64> {
    let r = curvature_group(xi, eta, &MetricTensor::identity())?;
    let area2 = xi.norm_squared() * eta.norm_squared() - xi.dot(eta).powi(2);
    if area2 <= 0.0 {
        return Err(Error::InvalidInput("degenerate plane".into()));
    }
    Ok(r.dot(eta) / area2)
}
