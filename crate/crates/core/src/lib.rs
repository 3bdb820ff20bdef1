//! Transport of signed Radon measures under linearly perturbed velocity fields,
//! and the derivative of the solution with respect to the perturbation
//! parameter, measured in the dual norm of `C^{1+α}`.
//!
//! The solution of `∂ₜμ + div(b^h μ) = w μ` with `b^h = b + h·b₁` is carried
//! by particles moving along characteristics ([`flow`]) and re-weighted by the
//! accumulated growth ([`pushforward`]). The `h`-derivative is a first-order
//! functional (point masses plus dipoles, [`sensitivity`]) whose distance to
//! difference quotients is certified by linear programs ([`dualnorms`]).

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dualnorms;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod flow;
pub mod functional;
pub mod lp;
pub mod measures;
pub mod pushforward;
pub mod sensitivity;
pub mod stats;

pub use error::{Error, Result};
pub use fields::{ScalarField, TestFunction, TimeProfile, TransportSystem, VectorField};
pub use functional::PointFunctional;
pub use measures::DiscreteMeasure;
