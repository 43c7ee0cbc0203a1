//! Harish-Chandra expansion for t away from the origin:
//!
//!   φ_λ(t) = c(λ) e^{(iλ-ρ)t} Φ_λ(t) + c(-λ) e^{(-iλ-ρ)t} Φ_{-λ}(t),
//!   Φ_λ(t) = Σ_k Γ_k(λ) e^{-2kt},  Γ_0 = 1,
//!
//! where the Γ_k follow from substituting the series into the Jacobi
//! equation:
//!
//!   (k+1)(k+1-iλ) Γ_{k+1} = (α-β) Σ_{j=0}^{k} (ρ+2j-iλ) Γ_j
//!                          + (2β+1) Σ_{j=1}^{⌊(k+1)/2⌋} (ρ+2(k+1-2j)-iλ) Γ_{k+1-2j}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{line_fit, lstsq};
use crate::jacobi::JacobiParams;

pub const K_MAX: usize = 200;
pub const SERIES_TOL: f64 = 1e-14;
const RESONANCE_GAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HCCoefficients {
    pub lambda: Complex64,
    pub values: Vec<Complex64>,
    pub k: usize,
}

/// Incremental evaluation of the direct recursion: keeps the running sums
/// so each new coefficient costs O(1).
#[derive(Debug, Clone)]
pub struct HcRecursion {
    alpha_minus_beta: f64,
    two_beta_plus_one: f64,
    rho_minus_il: Complex64,
    il: Complex64,
    all: Complex64,
    by_parity: [Complex64; 2],
    values: Vec<Complex64>,
}

impl HcRecursion {
    pub fn new(params: &JacobiParams, lambda: Complex64) -> Self {
        let il = Complex64::i() * lambda;
        Self {
            alpha_minus_beta: params.alpha - params.beta,
            two_beta_plus_one: 2.0 * params.beta + 1.0,
            rho_minus_il: params.rho - il,
            il,
            all: Complex64::new(0.0, 0.0),
            by_parity: [Complex64::new(0.0, 0.0); 2],
            values: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Appends Γ_{k+1} where k is the current last index.
    pub fn advance(&mut self) -> Result<Complex64> {
        let k = self.values.len() - 1;
        let gk = self.values[k];
        let weight = |m: usize| self.rho_minus_il + 2.0 * m as f64;
        self.all += weight(k) * gk;
        // the parity class of k+1 over m ≤ k-1 is complete once Γ_{k-1} is in
        if k >= 1 {
            let m = k - 1;
            self.by_parity[m % 2] += weight(m) * self.values[m];
        }
        let denom = (k as f64 + 1.0) * (k as f64 + 1.0 - self.il);
        let gap = (k as f64 + 1.0 - self.il).norm();
        if gap < RESONANCE_GAP {
            return Err(Error::Resonance { k, gap });
        }
        let next = (self.alpha_minus_beta * self.all + self.two_beta_plus_one * self.by_parity[(k + 1) % 2]) / denom;
        self.values.push(next);
        Ok(next)
    }
}

/// Γ_0..Γ_K by the direct recursion.
pub fn hc_coeffs(params: &JacobiParams, lambda: Complex64, k: usize) -> Result<HCCoefficients> {
    let mut rec = HcRecursion::new(params, lambda);
    for _ in 0..k {
        rec.advance()?;
    }
    Ok(HCCoefficients { lambda, values: rec.values, k })
}

/// a_k = [k(k-iλ) + (α-β)(ρ+2k-iλ)] / ((k+1)(k+1-iλ)).
pub fn hc_a_coefficient(params: &JacobiParams, lambda: Complex64, k: usize) -> Complex64 {
    let il = Complex64::i() * lambda;
    let kf = k as f64;
    (kf * (kf - il) + (params.alpha - params.beta) * (params.rho + 2.0 * kf - il)) / ((kf + 1.0) * (kf + 1.0 - il))
}

/// b_j^k = (-1)^{k+j+1} (2β+1)(ρ+2j-iλ) / ((k+1)(k+1-iλ)).
pub fn hc_b_coefficient(params: &JacobiParams, lambda: Complex64, j: usize, k: usize) -> Complex64 {
    let il = Complex64::i() * lambda;
    let kf = k as f64;
    let sign = if (k + j + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (2.0 * params.beta + 1.0) * (params.rho + 2.0 * j as f64 - il) / ((kf + 1.0) * (kf + 1.0 - il))
}

/// Γ_0..Γ_K by Γ_{k+1} = a_k Γ_k + Σ_{j<k} b_j^k Γ_j.
pub fn hc_coeffs_alt(params: &JacobiParams, lambda: Complex64, k: usize) -> Result<HCCoefficients> {
    let il = Complex64::i() * lambda;
    let mut values = vec![Complex64::new(1.0, 0.0)];
    for kk in 0..k {
        let gap = (kk as f64 + 1.0 - il).norm();
        if gap < RESONANCE_GAP {
            return Err(Error::Resonance { k: kk, gap });
        }
        let mut next = hc_a_coefficient(params, lambda, kk) * values[kk];
        if params.beta != -0.5 {
            for (j, v) in values[..kk].iter().enumerate() {
                next += hc_b_coefficient(params, lambda, j, kk) * v;
            }
        }
        values.push(next);
    }
    Ok(HCCoefficients { lambda, values, k })
}

/// c(λ) together with enough Γ_k(λ) to sum Φ_λ(t) for every t ≥ t_min.
#[derive(Debug, Clone)]
pub struct HcExpansion {
    pub lambda: f64,
    pub c: Complex64,
    pub rho: f64,
    pub coeffs: Vec<Complex64>,
    pub t_min: f64,
}

impl HcExpansion {
    /// Coefficients are generated until |Γ_K| e^{-2K t_min} falls below
    /// 1e-14 of the partial sum of Φ_λ(t_min); exceeding K_MAX is an error.
    pub fn new(params: &JacobiParams, lambda: f64, t_min: f64) -> Result<Self> {
        if lambda == 0.0 {
            return Err(Error::Pole { func: "phi_hc (c-function)", re: 0.0, im: 0.0 });
        }
        let lam = lambda.abs();
        let c = params.c_function(Complex64::new(lam, 0.0))?;
        let x = (-2.0 * t_min).exp();
        let mut rec = HcRecursion::new(params, Complex64::new(lam, 0.0));
        let mut sum = Complex64::new(1.0, 0.0);
        let mut xk = 1.0;
        // two consecutive small terms guard against an isolated near-zero Γ_k
        let mut small_run = 0;
        loop {
            let k = rec.values().len();
            if k > K_MAX {
                return Err(Error::NonConvergence { what: "Harish-Chandra series", cap: K_MAX });
            }
            let g = rec.advance()?;
            xk *= x;
            let term = g * xk;
            sum += term;
            if term.norm() < SERIES_TOL * sum.norm() {
                small_run += 1;
                if small_run >= 2 {
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        Ok(Self { lambda: lam, c, rho: params.rho, coeffs: rec.values, t_min })
    }

    /// Φ_λ(t) for t ≥ t_min.
    pub fn big_phi(&self, t: f64) -> Complex64 {
        let x = (-2.0 * t).exp();
        let mut s = Complex64::new(0.0, 0.0);
        for g in self.coeffs.iter().rev() {
            s = s * x + g;
        }
        s
    }

    /// φ_λ(t) = 2 Re[c(λ) e^{(iλ-ρ)t} Φ_λ(t)] for real λ.
    pub fn phi(&self, t: f64) -> f64 {
        debug_assert!(t >= self.t_min);
        let phase = Complex64::from_polar((-self.rho * t).exp(), self.lambda * t);
        2.0 * (self.c * phase * self.big_phi(t)).re
    }
}

/// φ_λ(t) from the Harish-Chandra expansion with adaptively chosen K.
pub fn phi_hc(params: &JacobiParams, lambda: f64, t: f64) -> Result<f64> {
    if t < params.r0 {
        return Err(Error::OutOfRange { what: "phi_hc: t", value: t, lo: params.r0, hi: f64::INFINITY });
    }
    Ok(HcExpansion::new(params, lambda, t)?.phi(t))
}

/// φ_λ(t) from the Harish-Chandra expansion truncated after Γ_K.
pub fn phi_hc_truncated(params: &JacobiParams, lambda: f64, t: f64, k: usize) -> Result<f64> {
    let lam = lambda.abs();
    let c = params.c_function(Complex64::new(lam, 0.0))?;
    let coeffs = hc_coeffs(params, Complex64::new(lam, 0.0), k)?.values;
    let e = HcExpansion { lambda: lam, c, rho: params.rho, coeffs, t_min: t };
    Ok(e.phi(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GangolliFit {
    pub k_fit: f64,
    pub d_fit: f64,
    /// 2q from the quadratic fit y ≈ a + b x + q x² of y = ln max_λ|Γ_k|
    /// against x = ln(1+k) over the upper three quarters of the k-range
    pub curvature: f64,
    pub passes: bool,
}

pub const CURVATURE_THRESHOLD: f64 = 0.1;

/// Fit of |Γ_k(λ)| ≤ K (1+k)^d over a grid of real λ and k ≤ K.
///
/// d is the regression slope of ln max_λ|Γ_k| on ln(1+k); K is then the
/// smallest constant making the bound hold on the sampled data. The
/// curvature check looks at k ≥ K/2 only, so K should be several times the
/// largest |λ| on the grid.
pub fn gangolli_fit(params: &JacobiParams, lambda_grid: &[f64], k: usize) -> Result<GangolliFit> {
    if k < 8 || lambda_grid.is_empty() || lambda_grid.contains(&0.0) {
        return Err(Error::InvalidParams { key: "lambda_grid", msg: "need k >= 8 and a non-empty grid avoiding 0".into() });
    }
    let mut envelope = vec![0.0f64; k + 1];
    for &l in lambda_grid {
        let c = hc_coeffs(params, Complex64::new(l, 0.0), k)?;
        for (e, g) in envelope.iter_mut().zip(&c.values) {
            *e = e.max(g.norm());
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (kk, e) in envelope.iter().enumerate() {
        if *e > 0.0 {
            xs.push((1.0 + kk as f64).ln());
            ys.push(e.ln());
        }
    }
    let d_fit = line_fit(&xs, &ys).slope;
    let k_fit = envelope
        .iter()
        .enumerate()
        .map(|(kk, e)| e / (1.0 + kk as f64).powf(d_fit))
        .fold(0.0, f64::max);
    // curvature over the upper half in k, past the bend at k ~ |λ| where the
    // growth switches between two polynomial rates
    let cut = (1.0 + (k / 2) as f64).ln();
    let start = xs.iter().position(|&x| x >= cut).unwrap_or(0);
    let (qx, qy) = (&xs[start..], &ys[start..]);
    let a = DMatrix::from_fn(qx.len(), 3, |i, j| qx[i].powi(j as i32));
    let (q, _) = lstsq(&a, &DVector::from_column_slice(qy), 1e12, "gangolli curvature")?;
    let curvature = 2.0 * q[2];
    Ok(GangolliFit { k_fit, d_fit, curvature, passes: curvature < CURVATURE_THRESHOLD })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversePowerExtraction {
    /// g_0..g_M with Γ_k(λ) ≈ Σ g_m (-iλ)^{-m}
    pub coeffs: Vec<f64>,
    pub sample_lambdas: Vec<f64>,
    pub residual: f64,
    pub condition_number: f64,
}

/// Numerical large-λ expansion of Γ_k.
///
/// Γ_k is a rational function of -iλ with real coefficients whose poles sit
/// at -iλ = -1..-k, so it expands in real powers of (-iλ)^{-1} for |λ| > k.
/// Γ_k is sampled at M+3 real λ spaced geometrically from 20(k+1); real and
/// imaginary parts give 2(M+3) equations. The system is solved for M+3
/// coefficients (two beyond those reported) so the truncation error of the
/// reported ones stays at rounding level.
pub fn hc_inverse_power_extract(params: &JacobiParams, k: usize, m: usize) -> Result<InversePowerExtraction> {
    if k > 20 || m > 4 {
        return Err(Error::InvalidParams { key: "k", msg: "extraction supports k <= 20 and M <= 4".into() });
    }
    let n = m + 3;
    let lambdas: Vec<f64> = (0..n).map(|s| 20.0 * (k as f64 + 1.0) * 1.6f64.powi(s as i32)).collect();
    let mut a = DMatrix::zeros(2 * n, n);
    let mut b = DVector::zeros(2 * n);
    for (s, &l) in lambdas.iter().enumerate() {
        let g = hc_coeffs(params, Complex64::new(l, 0.0), k)?.values[k];
        let x = Complex64::new(0.0, -l).inv();
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..n {
            a[(2 * s, j)] = p.re;
            a[(2 * s + 1, j)] = p.im;
            p *= x;
        }
        b[2 * s] = g.re;
        b[2 * s + 1] = g.im;
    }
    let (x, cond) = lstsq(&a, &b, 1e12, "hc_inverse_power_extract")?;
    let residual = (&a * &x - &b).amax();
    Ok(InversePowerExtraction { coeffs: x.iter().take(m + 1).copied().collect(), sample_lambdas: lambdas, residual, condition_number: cond })
}
