//! Numerical toolkit for alpha-stationary surfaces: critical points of the
//! weighted area `E_alpha = ∫ |p|^alpha dA`, characterized by
//! `H = alpha <N, p> / |p|^2`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod curve;
pub mod cyclic;
pub mod error;
pub mod expr;
pub mod flow;
pub mod interp;
pub mod inversion;
pub mod jet;
pub mod kernel;
pub mod ode;
pub mod ruled;
pub mod stationary;

pub use error::{Error, Result};
pub use kernel::{fundamental_data, FundamentalData, Jet2, ParametricPatch, Surface, UClosure, Vec3, DOMAIN_MARGIN};
