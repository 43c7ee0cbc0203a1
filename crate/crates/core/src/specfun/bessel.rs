//! Bessel functions of the first kind for real order μ ≥ -1/2 and x ≥ 0.
//!
//! Three regimes: the power series for small x, Miller's backward recurrence
//! normalised by the Neumann sum (x/2)^ν = Σ (ν+2k)Γ(ν+k)/k! J_{ν+2k}(x) for
//! intermediate x, and Hankel's asymptotic expansion once x is large compared
//! with both 30 and μ².

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::gamma::{gamma_real, ln_gamma_real};

const SERIES_MAX_X: f64 = 8.0;

fn hankel_threshold(mu: f64) -> f64 {
    30f64.max(1.5 * mu * mu)
}

/// J_μ(x). Returns +∞ at x = 0 for negative order, where J_μ is unbounded.
pub fn bessel_j(mu: f64, x: f64) -> f64 {
    assert!(mu >= -0.5 && x >= 0.0, "bessel_j needs mu >= -1/2, x >= 0 (got {mu}, {x})");
    if x == 0.0 {
        return if mu == 0.0 {
            1.0
        } else if mu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if x <= SERIES_MAX_X {
        (mu * (0.5 * x).ln()).exp() * reduced_series(mu, x)
    } else if x >= hankel_threshold(mu) {
        hankel(mu, x)
    } else {
        miller(mu, x)
    }
}

/// Σ_k (-x²/4)^k / (k! Γ(μ+k+1)), i.e. J_μ(x)/(x/2)^μ.
fn reduced_series(mu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0 / gamma_real(mu + 1.0).expect("mu + 1 > 0");
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (mu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn hankel(mu: f64, x: f64) -> f64 {
    let m4 = 4.0 * mu * mu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (m4 - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    // cos(x - θ) and sin(x - θ) expanded so x is never rounded against θ
    let theta = FRAC_PI_2 * mu + FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (st, ct) = theta.sin_cos();
    let cos_chi = cx * ct + sx * st;
    let sin_chi = sx * ct - cx * st;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn miller(mu: f64, x: f64) -> f64 {
    let nu0 = if mu >= 0.0 { mu - mu.floor() } else { mu };
    let n = (mu - nu0).round() as usize;
    let top = (n as f64).max(x);
    let mut start = (top + 30.0 + 6.0 * top.sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    // Backward recurrence J_{ν-1} = (2ν/x) J_ν - J_{ν+1}, arbitrary scale.
    let mut j_next = 0.0f64;
    let mut j_cur = 1e-300f64;
    let mut target = 0.0;
    // h_k = Γ(ν0+k)/(k! Γ(ν0+1)) for k ≥ 1
    let mut norm = 0.0;
    let mut h = vec![0.0; start / 2 + 2];
    h[1] = 1.0;
    for k in 1..h.len() - 1 {
        h[k + 1] = h[k] * (nu0 + k as f64) / (k as f64 + 1.0);
    }
    for m in (0..=start).rev() {
        if m == n {
            target = j_cur;
        }
        if m % 2 == 0 {
            let k = m / 2;
            norm += if k == 0 { j_cur } else { (nu0 + m as f64) * h[k] * j_cur };
        }
        if m == 0 {
            break;
        }
        let nu = nu0 + m as f64;
        let j_prev = 2.0 * nu / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            target *= 1e-250;
            norm *= 1e-250;
        }
    }
    let lhs = (nu0 * (0.5 * x).ln()).exp() / gamma_real(nu0 + 1.0).expect("nu0 > -1");
    target * lhs / norm
}

/// 𝒥_μ(x) = 2^{μ-1} √π Γ(μ+½) x^{-μ} J_μ(x), finite at x = 0.
pub fn script_j(mu: f64, x: f64) -> f64 {
    if x <= SERIES_MAX_X {
        0.5 * PI.sqrt() * gamma_real(mu + 0.5).expect("mu > -1/2") * reduced_series(mu, x)
    } else {
        let ln_scale = (mu - 1.0) * 2f64.ln() + 0.5 * PI.ln() + ln_gamma_real(mu + 0.5).unwrap() - mu * x.ln();
        ln_scale.exp() * bessel_j(mu, x)
    }
}

/// The limit √π Γ(μ+½) / (2Γ(μ+1)) of 𝒥_μ at the origin.
pub fn script_j_at_zero(mu: f64) -> f64 {
    0.5 * PI.sqrt() * gamma_real(mu + 0.5).unwrap() / gamma_real(mu + 1.0).unwrap()
}
