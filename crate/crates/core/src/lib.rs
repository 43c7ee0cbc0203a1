//! Jacobi analysis on the half-line: special functions, Jacobi functions and
//! their c-function, the Jacobi transform, and the spherical summation
//! operators S_R and S_* together with the experiments that probe them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// reference values keep every digit the oracle printed
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod fit;
pub mod harness;
pub mod jacobi;
pub mod multiplier;
pub mod quadrature;
pub mod report;
pub mod series;
pub mod specfun;
pub mod transform;

pub use error::{Error, Result};
pub use jacobi::JacobiParams;
pub use num_complex::Complex64;
