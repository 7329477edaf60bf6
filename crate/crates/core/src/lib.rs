//! Pseudo-spectral simulator and harmonic-analysis toolkit for
//! perturbations of the plane Couette flow `(y, 0)` on a periodic box.
//!
//! The crate provides:
//! - spectral grids, transforms and norm functionals ([`grid`], [`field`],
//!   [`norms`]),
//! - the closed-form solution operator of the linearized vorticity
//!   equation and quadrature evaluation of its decay and damping
//!   functionals ([`propagator`], [`linear_estimates`]),
//! - a shear-frame integrating-factor solver for the nonlinear
//!   perturbation system ([`sim`]),
//! - dyadic (Littlewood–Paley) decompositions, paraproducts and
//!   empirical checks of the functional inequalities they satisfy
//!   ([`dyadic`], [`inequalities`]),
//! - trajectory diagnostics: bootstrap functionals, decay-rate fits and
//!   run classification ([`diagnostics`]).

// numerical kernels index several arrays in lockstep, and `!(x > 0.0)`
// comparisons deliberately reject NaN
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_is_multiple_of
)]

pub mod diagnostics;
pub mod dyadic;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod inequalities;
pub mod linear_estimates;
pub mod norms;
pub mod propagator;
pub mod sim;

pub use error::{CoreError, Result};
pub use field::{Frame, SpectralField};
pub use grid::{GridParams, GridSpec};
pub use norms::NormBundle;
