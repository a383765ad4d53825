//! Reduced variables of SO(3) curves over S² and the reduced cubic system.
//!
//! A group curve with right velocity `ξ` is reduced to its base curve
//! `x = g e_z` and the vertical scalar `σ = ξ·x`. For cubics on SO(3) the
//! pair satisfies a vector equation on S² together with a scalar equation
//! whose left side is a constant `α`.

use nalgebra::Vector3;

use crate::dynamics::NhpState;
use crate::error::{Error, Result};
use crate::lie::{adjoint, AlgebraVector, GroupElement};
use crate::sphere::project;
use crate::stencil::{self, MIN_SAMPLES};
use crate::trajectory::Trajectory;

/// Base-curve jet and vertical scalar jet at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSample {
    pub t: f64,
    pub x: Vector3<f64>,
    pub xdot: Vector3<f64>,
    pub xddot: Vector3<f64>,
    pub xdddot: Vector3<f64>,
    pub xddddot: Vector3<f64>,
    pub sigma: f64,
    pub sigma_dot: f64,
    pub sigma_ddot: f64,
}

/// Vertical scalar `(Ad_{g⁻¹} ξ)·e_z` of the right velocity `ξ` at `g`.
pub fn sigma_from_group(g: &GroupElement, xi: &AlgebraVector) -> f64 {
    adjoint(&g.inverse(), xi).z
}

fn tangential(x: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    v - x * v.dot(x)
}

/// `½‖D_t ẋ − σ x × ẋ‖² + ½σ̇²`.
pub fn reduced_lagrangian_s2(s: &ReducedSample) -> f64 {
    let acc = tangential(&s.x, &s.xddot);
    let d = acc - s.x.cross(&s.xdot) * s.sigma;
    0.5 * d.norm_squared() + 0.5 * s.sigma_dot * s.sigma_dot
}

/// `-x·(ẋ × ẍ) + σ‖ẋ‖² − σ̈`.
pub fn alpha(s: &ReducedSample) -> f64 {
    -s.x.dot(&s.xdot.cross(&s.xddot)) + s.sigma * s.xdot.norm_squared() - s.sigma_ddot
}

/// Covariant derivatives `(D ẋ, D² ẋ, D³ ẋ)` from the ambient jet.
pub fn covariant_jet(s: &ReducedSample) -> [Vector3<f64>; 3] {
    let (x, x1, x2, x3, x4) = (s.x, s.xdot, s.xddot, s.xdddot, s.xddddot);
    let speed2 = x1.norm_squared();
    let a = x2 + x * speed2;
    let a1 = x3 + x * (2.0 * x1.dot(&x2)) + x1 * speed2;
    let a2 = x4 + x * (2.0 * (x2.dot(&x2) + x1.dot(&x3))) + x1 * (4.0 * x1.dot(&x2)) + x2 * speed2;
    let b = a1 - x * a1.dot(&x);
    let b1 = a2 - (x * (a2.dot(&x) + a1.dot(&x1)) + x1 * a1.dot(&x));
    [tangential(&x, &a), b, tangential(&x, &b1)]
}

/// Left minus right side of the reduced vector equation for a given `α`.
pub fn vector_residual(s: &ReducedSample, alpha: f64) -> Vector3<f64> {
    let (x, x1, x2, x3) = (s.x, s.xdot, s.xddot, s.xdddot);
    let (sg, sg1, sg2) = (s.sigma, s.sigma_dot, s.sigma_ddot);
    let speed2 = x1.norm_squared();
    let [d1, _, d3] = covariant_jet(s);
    let lhs = d3 + d1 * speed2 - x1 * d1.dot(&x1);
    let xv = x.cross(&x1);
    let rhs = tangential(&x, &x2) * (sg * sg)
        + x1 * (2.0 * sg * sg1)
        + xv * sg2
        + x.cross(&x2) * (3.0 * sg1)
        + (x.cross(&x3) * 2.0 + tangential(&x, &x1.cross(&x2)) * 2.0 + xv * speed2) * sg
        - xv * alpha;
    lhs - rhs
}

/// Exact reduced sample of an NHP state, using `ẋ = J × x` and its derivatives.
pub fn sample_from_nhp(t: f64, s: &NhpState) -> ReducedSample {
    let (j, j1, j2) = (s.j, s.j1, s.j2);
    let x = *project(&s.g).as_vector();
    let x1 = j.cross(&x);
    let x2 = j1.cross(&x) + j.cross(&x1);
    let x3 = j2.cross(&x) + j1.cross(&x1) * 2.0 + j.cross(&x2);
    let x4 = j.cross(&j2).cross(&x) + j2.cross(&x1) * 3.0 + j1.cross(&x2) * 3.0 + j.cross(&x3);
    ReducedSample {
        t,
        x,
        xdot: x1,
        xddot: x2,
        xdddot: x3,
        xddddot: x4,
        sigma: j.dot(&x),
        sigma_dot: j1.dot(&x),
        sigma_ddot: j2.dot(&x) + j1.dot(&x1),
    }
}

/// Differentiates sampled `x(t)` and `σ(t)` at interior points with the
/// shared fourth-order stencils.
pub fn reduced_samples_from_series(
    t0: f64,
    dt: f64,
    xs: &[Vector3<f64>],
    sigmas: &[f64],
) -> Result<Vec<ReducedSample>> {
    if xs.len() != sigmas.len() {
        return Err(Error::InvalidInput("series lengths differ".into()));
    }
    if xs.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            got: xs.len(),
        });
    }
    Ok(stencil::interior(xs.len())
        .map(|i| {
            let d = |k| stencil::derivative(xs, i, k, dt);
            let ds = |k| stencil::derivative(sigmas, i, k, dt);
            ReducedSample {
                t: t0 + i as f64 * dt,
                x: xs[i],
                xdot: d(1),
                xddot: d(2),
                xdddot: d(3),
                xddddot: d(4),
                sigma: sigmas[i],
                sigma_dot: ds(1),
                sigma_ddot: ds(2),
            }
        })
        .collect())
}

/// Reduced samples of an NHP trajectory, differentiated numerically.
pub fn reduced_samples(traj: &Trajectory<NhpState>) -> Result<Vec<ReducedSample>> {
    let xs: Vec<Vector3<f64>> = traj.states().iter().map(|s| *project(&s.g).as_vector()).collect();
    let sigmas: Vec<f64> = traj
        .states()
        .iter()
        .map(|s| sigma_from_group(&s.g, &s.j))
        .collect();
    reduced_samples_from_series(traj.t0(), traj.dt(), &xs, &sigmas)
}

/// Alpha series statistics and vector residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Lp2Report {
    pub times: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_mean: f64,
    pub alpha_std: f64,
    pub residuals: Vec<Vector3<f64>>,
}

impl Lp2Report {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

/// Evaluates the scalar equation at every sample, then the vector equation
/// with `α` set to the mean of the series.
pub fn lp2_residuals(samples: &[ReducedSample]) -> Result<Lp2Report> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples {
            required: 1,
            got: 0,
        });
    }
    let alphas: Vec<f64> = samples.iter().map(alpha).collect();
    let n = alphas.len() as f64;
    let mean = alphas.iter().sum::<f64>() / n;
    let std = (alphas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Lp2Report {
        times: samples.iter().map(|s| s.t).collect(),
        residuals: samples.iter().map(|s| vector_residual(s, mean)).collect(),
        alpha: alphas,
        alpha_mean: mean,
        alpha_std: std,
    })
}
