//! Gauss hypergeometric function on the ray z ≤ 0.
//!
//! The production route sums the defining series close to the origin and then
//! continues the solution of the hypergeometric equation
//!
//!   z(1-z)u'' + [c - (a+b+1)z]u' - ab·u = 0
//!
//! along the negative axis by re-expanding it in Taylor series at successive
//! centres. Every partial sum in that scheme has terms of comparable size, so
//! large |a|, |b| (the Jacobi case with large spectral parameter) cost extra
//! steps rather than digits.

use num_complex::Complex64;

use super::gamma::{log_gamma, rgamma};
use crate::error::{Error, Result};

pub const ITERATION_CAP: usize = 100_000;

const TERM_TOL: f64 = 1e-17;

fn is_nonpositive_integer(z: Complex64, tol: f64) -> Option<usize> {
    let n = z.re.round();
    if n <= 0.0 && (z.re - n).abs() <= tol && z.im.abs() <= tol {
        Some((-n) as usize)
    } else {
        None
    }
}

/// ₂F₁(a, b; c; z) for real z ≤ 0.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Result<Complex64> {
    validate(a, b, c, z)?;
    if z == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let tol = 1e-14 * (1.0 + a.norm().max(b.norm()));
    if let Some(n) = is_nonpositive_integer(a, tol).or(is_nonpositive_integer(b, tol)) {
        return Ok(polynomial(a, b, c, z, n));
    }
    let z0 = start_point(a, b, c);
    if z >= z0 {
        return Ok(series(a, b, c, z)?.0);
    }
    let (u, du) = series(a, b, c, z0)?;
    continue_along_axis(a, b, c, z0, u, du, z)
}

fn validate(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Result<()> {
    for v in [a, b, c] {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { what: "hyp2f1 parameters" });
        }
    }
    if !z.is_finite() || z > 0.0 {
        return Err(Error::OutOfRange { what: "hyp2f1 argument", value: z, lo: f64::NEG_INFINITY, hi: 0.0 });
    }
    if is_nonpositive_integer(c, 1e-12).is_some() {
        return Err(Error::Pole { func: "hyp2f1 (c parameter)", re: c.re, im: c.im });
    }
    Ok(())
}

fn polynomial(a: Complex64, b: Complex64, c: Complex64, z: f64, n: usize) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..n {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
    }
    sum
}

/// Largest |z| at which every term ratio of the defining series is ≤ 1/2.
fn start_point(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let kmax = (2.0 * c.norm() + 10.0) as usize;
    let mut mc: f64 = 1.0;
    for k in 0..=kmax {
        mc = mc.min((c + k as f64).norm() / (k as f64 + 1.0));
    }
    let s = 1.0 + a.norm() * b.norm() + a.norm() + b.norm();
    -(0.5 * mc / s).min(0.25)
}

/// Value and derivative of the defining series.
fn series(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Result<(Complex64, Complex64)> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut dsum = Complex64::new(0.0, 0.0);
    for k in 0..ITERATION_CAP {
        let kf = k as f64;
        // derivative term: (a)_{k+1}(b)_{k+1}/((c)_{k+1} k!) z^k
        dsum += term * (a + kf) * (b + kf) / (c + kf);
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.norm() < TERM_TOL * sum.norm() && k > 2 {
            return Ok((sum, dsum));
        }
        if term.norm() == 0.0 {
            return Ok((sum, dsum));
        }
    }
    Err(Error::NonConvergence { what: "hyp2f1 series", cap: ITERATION_CAP })
}

fn continue_along_axis(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    z0: f64,
    mut u: Complex64,
    mut du: Complex64,
    z: f64,
) -> Result<Complex64> {
    let ab = a * b;
    let q1 = -(a + b + 1.0);
    let mut zc = z0;
    let mut steps = 0usize;
    while zc > z {
        steps += 1;
        if steps > ITERATION_CAP {
            return Err(Error::NonConvergence { what: "hyp2f1 continuation", cap: ITERATION_CAP });
        }
        let p0 = zc * (1.0 - zc);
        let q0 = c + q1 * zc;
        let k_osc = (ab.norm() / p0.abs()).sqrt().max(q0.norm() / p0.abs());
        let mut h = (0.5 * zc.abs()).min(zc - z);
        if k_osc > 0.0 {
            h = h.min(1.5 / k_osc);
        }
        let h = -h;
        let p1 = 1.0 - 2.0 * zc;
        // Scaled Taylor coefficients w_n = u_n h^n of the solution around zc.
        let mut w0 = u;
        let mut w1 = du * h;
        let mut val = w0 + w1;
        let mut dval = w1;
        let mut n = 0usize;
        loop {
            let nf = n as f64;
            let w2 = -((w1 * (p1 * nf) + w1 * q0) * (nf + 1.0) * h
                + w0 * (-(nf * (nf - 1.0)) + q1 * nf - ab) * h * h)
                / (p0 * (nf + 2.0) * (nf + 1.0));
            val += w2;
            dval += w2 * (nf + 2.0);
            n += 1;
            if n > 6 && w2.norm() + w1.norm() < TERM_TOL * val.norm() {
                break;
            }
            if n > ITERATION_CAP {
                return Err(Error::NonConvergence { what: "hyp2f1 Taylor step", cap: ITERATION_CAP });
            }
            w0 = w1;
            w1 = w2;
        }
        u = val;
        du = dval / h;
        zc += h;
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(Error::NonFinite { what: "hyp2f1 continuation" });
        }
    }
    Ok(u)
}

/// Independent evaluation by the Pfaff transformation followed, for
/// arguments close to 1, by the 1-w connection formula. Used to cross-check
/// the continuation route for moderate parameters; it refuses parameters with
/// c-a-b within 1e-6 of an integer instead of switching to the logarithmic
/// limit form.
pub fn hyp2f1_transformed(a: Complex64, b: Complex64, c: Complex64, z: f64) -> Result<Complex64> {
    validate(a, b, c, z)?;
    if z == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let w = z / (z - 1.0);
    let pre = Complex64::new(1.0 - z, 0.0).powc(-a);
    let b2 = c - b;
    if w <= 0.9 {
        return Ok(pre * plain_series(a, b2, c, w)?);
    }
    let s = c - a - b2;
    let m = s.re.round();
    if (s - Complex64::new(m, 0.0)).norm() < 1e-6 {
        return Err(Error::Degenerate {
            what: "hyp2f1_transformed",
            msg: format!("c-a-b = {s} is within 1e-6 of an integer"),
        });
    }
    let one_m_w = 1.0 - w;
    let lg_c = log_gamma(c)?;
    let g1 = (lg_c + log_gamma(s)?).exp() * rgamma(c - a) * rgamma(c - b2);
    let g2 = (lg_c + log_gamma(-s)?).exp() * rgamma(a) * rgamma(b2);
    let f1 = plain_series(a, b2, a + b2 - c + 1.0, one_m_w)?;
    let f2 = plain_series(c - a, c - b2, s + 1.0, one_m_w)?;
    Ok(pre * (g1 * f1 + g2 * Complex64::new(one_m_w, 0.0).powc(s) * f2))
}

fn plain_series(a: Complex64, b: Complex64, c: Complex64, x: f64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..ITERATION_CAP {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term.norm() < TERM_TOL * sum.norm().max(1e-300) && kf > a.norm() + b.norm() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence { what: "hyp2f1 transformed series", cap: ITERATION_CAP })
}
