//! Approximate message passing solvers for `y = A x + n`.
//!
//! Three iterations are provided: vector-stepsize AMP, scalar-stepsize AMP and
//! UT-AMP, which runs AMP on the unitarily transformed model
//! `r = U^H y = Λ V x + w` obtained from `A = U Λ V`. For Gaussian priors the
//! [`spectral`] module computes the fixed-point variance, the closed-form
//! eigenvalues of the UT-AMP iteration matrix and a convergence certificate.

// validation is written as `!(x > 0.0)` so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod eig;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod io;
pub mod lmmse;
pub mod model;
pub mod solver;
pub mod spectral;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

pub(crate) fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
