//! Riemannian cubics on SO(3) and the round sphere.
//!
//! The crate covers the algebra primitives ([`lie`]), the sphere as a
//! homogeneous space ([`sphere`]), fixed-step integrators for the cubic and
//! geodesic flows ([`dynamics`], [`ballistic`]), horizontal lifts and
//! liftability tests ([`lifting`]), reduced-system residuals ([`lp`]) and a
//! shooting solver for two-point problems ([`planner`]).

pub mod ballistic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod lie;
pub mod lifting;
pub mod lp;
pub mod planner;
pub mod sphere;
pub mod stencil;
pub mod trajectory;

pub use error::{Error, Result};
pub use lie::{AlgebraVector, GroupElement, MetricTensor};
pub use sphere::{SpherePoint, TangentVector};
pub use trajectory::Trajectory;
