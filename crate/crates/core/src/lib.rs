//! Constructive tail-improving renormings of finite-dimensional spaces with a
//! coordinate basis.
//!
//! The crate is organised bottom-up:
//!
//! * [`body`] holds symmetric convex polytopes in exact double description
//!   together with the set operations used to build new unit balls.
//! * [`tower`] iterates the hull surgery one coordinate at a time, producing
//!   the sequence of norms `‖·‖_n`, their certificates, and the rescaled norms.
//! * [`planner`] turns a target accuracy sequence into the step sizes `λ` and
//!   smoothing widths `δ`.
//! * [`glue`] smooths the rescaled norms and glues them into the final norm,
//!   evaluated as the root of a scalar equation with an analytic gradient.
//! * [`oracle`] is a numeric twin of [`body`] for unit balls that are only
//!   known through their gauge.
//!
//! Linear algebra routines are generic over [`Scalar`]; the exact pipeline runs
//! on [`Rational`] and the smooth pipeline on `f64`.

pub mod body;
pub mod dd;
pub mod error;
pub mod glue;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod planner;
pub mod projection;
pub mod scalar;
pub mod tower;

pub use body::{ConvexBody, Functional};
pub use error::{Error, Result};
pub use projection::Projection;
pub use scalar::{rat, Rational, Scalar};

/// Convex body over exact rationals.
pub type ExactBody = ConvexBody<Rational>;
/// Convex body over binary64; set operations use tolerance comparisons.
pub type FloatBody = ConvexBody<f64>;
/// Renorming tower over exact rationals.
pub type ExactTower = tower::RenormTower<Rational>;
/// Glued family evaluated in binary64.
pub type Glue = glue::GlueFamily<f64>;
