//! Expansions of φ_λ(t): local Bessel expansion near the origin and the
//! Harish-Chandra series away from it, plus a route-switching evaluator.

mod bessel_expansion;
mod harish_chandra;

pub use bessel_expansion::{
    a1_exact, bessel_coeffs, collocation_nodes, envelope as bessel_envelope, phi_bessel, prefactor as bessel_prefactor,
    BesselExpansionCoeffs, COLLOCATION_RESIDUAL_LIMIT, MAX_ORDER,
};
pub use harish_chandra::{
    gangolli_fit, hc_a_coefficient, hc_b_coefficient, hc_coeffs, hc_coeffs_alt, hc_inverse_power_extract, phi_hc,
    phi_hc_truncated, GangolliFit, HCCoefficients, HcExpansion, HcRecursion, InversePowerExtraction,
    CURVATURE_THRESHOLD, K_MAX, SERIES_TOL,
};

use crate::error::Result;
use crate::jacobi::JacobiParams;

/// |λ| above which the Harish-Chandra route is used for large t.
pub const HC_MIN_LAMBDA: f64 = 0.25;

/// Start of the Harish-Chandra region, max(R₀, 1).
pub fn hc_switch(params: &JacobiParams) -> f64 {
    params.r0.max(1.0)
}

/// Which representation [`phi_any`] uses at (λ, t).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Hypergeometric,
    HarishChandra,
}

pub fn route_for(params: &JacobiParams, lambda: f64, t: f64) -> Route {
    if t >= hc_switch(params) && lambda.abs() > HC_MIN_LAMBDA {
        Route::HarishChandra
    } else {
        Route::Hypergeometric
    }
}

/// φ_λ(t) for real λ: the hypergeometric series near the origin and for
/// small |λ|, the Harish-Chandra series for t ≥ max(R₀, 1).
pub fn phi_any(params: &JacobiParams, lambda: f64, t: f64) -> Result<f64> {
    match route_for(params, lambda, t) {
        Route::HarishChandra => phi_hc(params, lambda, t).or_else(|_| params.phi_real(lambda, t)),
        Route::Hypergeometric => params.phi_real(lambda, t),
    }
}

/// φ_λ(t) at every t of `ts` with the same routing as [`phi_any`]; the
/// Harish-Chandra coefficients are computed once for the whole column.
pub fn phi_column(params: &JacobiParams, lambda: f64, ts: &[f64]) -> Result<Vec<f64>> {
    let switch = hc_switch(params);
    let hc = if lambda.abs() > HC_MIN_LAMBDA && ts.iter().any(|&t| t >= switch) {
        HcExpansion::new(params, lambda, switch).ok()
    } else {
        None
    };
    ts.iter()
        .map(|&t| match &hc {
            Some(h) if t >= switch => Ok(h.phi(t)),
            _ => params.phi_real(lambda, t),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_and_values() {
        let p = JacobiParams::new(1.3, 0.2).unwrap();
        assert_eq!(route_for(&p, 5.0, 0.5), Route::Hypergeometric);
        assert_eq!(route_for(&p, 5.0, 3.0), Route::HarishChandra);
        assert_eq!(route_for(&p, 0.1, 3.0), Route::Hypergeometric);
        for (l, t) in [(5.0, 0.5), (5.0, 3.0), (0.1, 3.0)] {
            let a = phi_any(&p, l, t).unwrap();
            let b = p.phi_real(l, t).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn column_matches_pointwise() {
        let p = JacobiParams::new(1.3, 0.2).unwrap();
        let ts = [0.01, 0.5, 1.0, 1.05, 2.0, 7.5];
        for l in [0.1, 3.0, 40.0] {
            let col = phi_column(&p, l, &ts).unwrap();
            for (t, v) in ts.iter().zip(&col) {
                assert!((v - phi_any(&p, l, *t).unwrap()).abs() < 1e-14, "λ {l} t {t}");
            }
        }
    }
}
