//! Complex special functions used throughout the crate.

mod bessel;
mod gamma;
mod hyp2f1;

pub use bessel::{bessel_j, script_j, script_j_at_zero};
pub use gamma::{
    digamma, gamma_real, ln_abs_gamma_plus_half_pi_y, ln_gamma_real, log_gamma, rgamma, trigamma,
};
pub use hyp2f1::{hyp2f1, hyp2f1_transformed, ITERATION_CAP};

pub type ComplexValue = num_complex::Complex64;
