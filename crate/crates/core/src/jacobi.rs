//! Jacobi parameters, the weight Δ, Jacobi functions, the c-function and the
//! Plancherel density.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{line_fit, lstsq};
use crate::specfun::{digamma, hyp2f1, ln_abs_gamma_plus_half_pi_y, ln_gamma_real, log_gamma, trigamma};

pub const DEFAULT_R0: f64 = 1.05;

/// Jacobi parameters (α, β) with α > β ≥ -1/2, plus the derived constants and
/// the radius R₀ separating the local from the large-t regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub p0: f64,
    pub p1: f64,
    pub r0: f64,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_r0(alpha, beta, DEFAULT_R0)
    }

    pub fn with_r0(alpha: f64, beta: f64, r0: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParams { key: "alpha", msg: "alpha and beta must be finite".into() });
        }
        if alpha <= beta {
            return Err(Error::InvalidParams {
                key: "alpha",
                msg: format!("alpha = {alpha} must be greater than beta = {beta}"),
            });
        }
        // β = -1/2 is admitted: it is the rank-one hyperbolic-space case
        if beta < -0.5 {
            return Err(Error::InvalidParams { key: "beta", msg: format!("beta = {beta} must be at least -1/2") });
        }
        if beta.abs() >= alpha + 1.0 {
            return Err(Error::InvalidParams { key: "beta", msg: "|beta| must be below alpha + 1".into() });
        }
        let r0_max = (PI / 2.0).sqrt();
        if !(r0 > 1.0 && r0 < r0_max) {
            return Err(Error::InvalidParams { key: "r0", msg: format!("r0 = {r0} must lie in (1, {r0_max:.6})") });
        }
        Ok(Self {
            alpha,
            beta,
            rho: alpha + beta + 1.0,
            p0: (4.0 * alpha + 4.0) / (2.0 * alpha + 3.0),
            p1: (4.0 * alpha + 4.0) / (2.0 * alpha + 1.0),
            r0,
        })
    }

    /// Δ(t) = (2 sinh t)^{2α+1} (2 cosh t)^{2β+1}.
    pub fn weight_delta(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "weight_delta needs t >= 0");
        if t == 0.0 {
            return 0.0;
        }
        self.ln_weight_delta(t).exp()
    }

    pub fn ln_weight_delta(&self, t: f64) -> f64 {
        // ln(2 sinh t) = t + ln(1 - e^{-2t}), ln(2 cosh t) = t + ln(1 + e^{-2t})
        let e = (-2.0 * t).exp();
        let ls = t + (-e).ln_1p();
        let lc = t + e.ln_1p();
        let ls = if t < 0.1 { (2.0 * t.sinh()).ln() } else { ls };
        (2.0 * self.alpha + 1.0) * ls + (2.0 * self.beta + 1.0) * lc
    }

    /// φ_λ(t) = ₂F₁((ρ-iλ)/2, (ρ+iλ)/2; α+1; -sinh²t).
    pub fn phi(&self, lambda: Complex64, t: f64) -> Result<Complex64> {
        if !(t >= 0.0) {
            return Err(Error::OutOfRange { what: "phi: t", value: t, lo: 0.0, hi: f64::INFINITY });
        }
        let il = Complex64::i() * lambda;
        let a = (self.rho - il) * 0.5;
        let b = (self.rho + il) * 0.5;
        let s = t.sinh();
        hyp2f1(a, b, Complex64::new(self.alpha + 1.0, 0.0), -s * s)
    }

    /// φ_λ(t) for real λ, where the function is real.
    pub fn phi_real(&self, lambda: f64, t: f64) -> Result<f64> {
        Ok(self.phi(Complex64::new(lambda, 0.0), t)?.re)
    }

    /// c(λ) = 2^{ρ-iλ} Γ(α+1) Γ(iλ) / (Γ((ρ+iλ)/2) Γ((α-β+1+iλ)/2)).
    pub fn c_function(&self, lambda: Complex64) -> Result<Complex64> {
        let il = Complex64::i() * lambda;
        let ln = (self.rho - il) * LN_2 + ln_gamma_real(self.alpha + 1.0)? + log_gamma(il)?
            - log_gamma((self.rho + il) * 0.5)?
            - log_gamma((self.alpha - self.beta + 1.0 + il) * 0.5)?;
        Ok(ln.exp())
    }

    /// ln |c(λ)|^{-2} for real λ > 0, free of the exponential cancellation
    /// between the Γ factors.
    pub fn ln_inv_c_abs_sq(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::OutOfRange { what: "|c|^-2: lambda", value: lambda, lo: 0.0, hi: f64::INFINITY });
        }
        let half = 0.5 * lambda;
        let l2 = ln_abs_gamma_plus_half_pi_y(0.5 * self.rho, half)?;
        let l3 = ln_abs_gamma_plus_half_pi_y(0.5 * (self.alpha - self.beta + 1.0), half)?;
        Ok(-2.0 * self.rho * LN_2 - 2.0 * ln_gamma_real(self.alpha + 1.0)? - PI.ln()
            + lambda.ln()
            + (-(-2.0 * PI * lambda).exp_m1() * 0.5).ln()
            + 2.0 * l2
            + 2.0 * l3)
    }

    /// |c(λ)|^{-2} for real λ; extended by 0 at λ = 0, even in λ.
    pub fn inv_c_abs_sq(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        if l == 0.0 {
            return 0.0;
        }
        self.ln_inv_c_abs_sq(l).map(f64::exp).unwrap_or(f64::NAN)
    }

    /// Plancherel density (2π)^{-1} |c(λ)|^{-2}, the measure making the
    /// transform pair of [`crate::transform`] unitary.
    pub fn plancherel_density(&self, lambda: f64) -> f64 {
        self.inv_c_abs_sq(lambda) / (2.0 * PI)
    }

    /// c'(λ)/c(λ) (order 1) or c''(λ)/c(λ) (order 2) from digamma and
    /// trigamma values at iλ, (ρ+iλ)/2 and (α-β+1+iλ)/2.
    pub fn c_log_derivative(&self, lambda: f64, order: u8) -> Result<Complex64> {
        if !(lambda > 0.0) {
            return Err(Error::OutOfRange { what: "c_log_derivative: lambda", value: lambda, lo: 0.0, hi: f64::INFINITY });
        }
        let i = Complex64::i();
        let il = Complex64::new(0.0, lambda);
        let z2 = (self.rho + il) * 0.5;
        let z3 = (self.alpha - self.beta + 1.0 + il) * 0.5;
        let first = -i * LN_2 + i * digamma(il)? - i * 0.5 * (digamma(z2)? + digamma(z3)?);
        match order {
            1 => Ok(first),
            2 => {
                let second = -trigamma(il)? + 0.25 * (trigamma(z2)? + trigamma(z3)?);
                Ok(second + first * first)
            }
            _ => Err(Error::InvalidParams { key: "order", msg: format!("order must be 1 or 2, got {order}") }),
        }
    }
}

/// c₀ λ^{2α+1} (1 + Σ_{j=1}^{M-1} c_j λ^{-j}) fitted to |c(λ)|^{-2}.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticExpansion {
    pub leading_constant: f64,
    pub correction_coeffs: Vec<f64>,
    pub order: usize,
    pub fit_range: (f64, f64),
    /// slope of ln |c|^{-2} against ln λ over the whole grid
    pub growth_exponent: f64,
    /// slope of ln |residual| against ln λ, over grid points whose residual
    /// is above the floating-point floor; `None` if fewer than three are
    pub residual_growth_exponent: Option<f64>,
    /// (2α+1) - residual_growth_exponent: how many powers of λ the
    /// expansion gains over the leading term
    pub residual_decay_exponent: Option<f64>,
    pub points_above_floor: usize,
    pub condition_number: f64,
    pub max_relative_residual: f64,
}

/// Residuals relative to |c|^{-2} below this are treated as rounding noise.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Log-spaced grid of n points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Fit of the large-λ expansion of |c(λ)|^{-2}.
///
/// ln(|c|^{-2} λ^{-(2α+1)}) is fitted by a polynomial in 1/λ with more terms
/// than requested; c₀ and c_1..c_{M-1} are read off the exponential of that
/// polynomial. The residual of the order-M truncation is then regressed
/// against ln λ to measure how fast it decays.
pub fn c_asymptotic_fit(params: &JacobiParams, order: usize, lambda_grid: &[f64]) -> Result<AsymptoticExpansion> {
    if order < 1 {
        return Err(Error::InvalidParams { key: "order", msg: "expansion order must be at least 1".into() });
    }
    if lambda_grid.len() < order + 4 || lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParams { key: "lambda_grid", msg: "need enough positive grid points".into() });
    }
    let lead = 2.0 * params.alpha + 1.0;
    let lnd: Vec<f64> = lambda_grid.iter().map(|&l| params.ln_inv_c_abs_sq(l)).collect::<Result<_>>()?;
    let lnl: Vec<f64> = lambda_grid.iter().map(|l| l.ln()).collect();
    let growth = line_fit(&lnl, &lnd).slope;

    let n_terms = (order + 3).max(7);
    let u_max = lambda_grid.iter().map(|l| 1.0 / l).fold(0.0, f64::max);
    let a = DMatrix::from_fn(lambda_grid.len(), n_terms, |i, j| (1.0 / (lambda_grid[i] * u_max)).powi(j as i32));
    let g = DVector::from_iterator(lambda_grid.len(), lnd.iter().zip(&lnl).map(|(d, l)| d - lead * l));
    let (e_scaled, cond) = lstsq(&a, &g, 1e12, "c_asymptotic_fit")?;
    let e: Vec<f64> = (0..n_terms).map(|j| e_scaled[j] / u_max.powi(j as i32)).collect();

    // exp(Σ_{j≥1} e_j u^j) truncated at u^{M-1}: b' = E' b with b_0 = 1
    let mut b = vec![0.0; order];
    b[0] = 1.0;
    for k in 1..order {
        let mut s = 0.0;
        for j in 1..=k {
            s += j as f64 * e[j] * b[k - j];
        }
        b[k] = s / k as f64;
    }
    let c0 = e[0].exp();

    let mut max_rel: f64 = 0.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &l) in lambda_grid.iter().enumerate() {
        let d = lnd[i].exp();
        let mut poly = 0.0;
        for k in (0..order).rev() {
            poly = poly / l + b[k];
        }
        let model = c0 * l.powf(lead) * poly;
        let r = (d - model).abs();
        max_rel = max_rel.max(r / d);
        if r > RESIDUAL_FLOOR * d {
            xs.push(l.ln());
            ys.push(r.ln());
        }
    }
    let resid_growth = (xs.len() >= 3).then(|| line_fit(&xs, &ys).slope);
    Ok(AsymptoticExpansion {
        leading_constant: c0,
        correction_coeffs: b[1..].to_vec(),
        order,
        fit_range: (
            lambda_grid.iter().cloned().fold(f64::INFINITY, f64::min),
            lambda_grid.iter().cloned().fold(0.0, f64::max),
        ),
        growth_exponent: growth,
        residual_growth_exponent: resid_growth,
        residual_decay_exponent: resid_growth.map(|s| lead - s),
        points_above_floor: xs.len(),
        condition_number: cond,
        max_relative_residual: max_rel,
    })
}
