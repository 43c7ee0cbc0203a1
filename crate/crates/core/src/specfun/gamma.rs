use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_2, B_4, ..., B_40
const BERNOULLI: [f64; 20] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
    -7709321041217.0 / 510.0,
    2577687858367.0 / 6.0,
    -13_711_655_205_088.332_772,
    2929993913841559.0 / 6.0,
    -19_296_579_341_940_068.149,
];

// Arguments are shifted upward until the real part reaches this value before
// the asymptotic series is used.
const SHIFT_TARGET: f64 = 10.0;

fn check_pole(z: Complex64, func: &'static str) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite { what: func });
    }
    if z.re <= 0.5 {
        let n = z.re.round();
        if n <= 0.0 && (z - Complex64::new(n, 0.0)).norm() < 1e-12 {
            return Err(Error::Pole { func, re: z.re, im: z.im });
        }
    }
    Ok(())
}

fn shift_count(z: Complex64) -> usize {
    if z.re >= SHIFT_TARGET {
        0
    } else {
        (SHIFT_TARGET - z.re).ceil() as usize
    }
}

/// Principal branch of log Γ(z).
///
/// The argument is moved into the Stirling region by the upward recurrence
/// Γ(z) = Γ(z+n) / (z(z+1)...(z+n-1)); summing principal logarithms of the
/// factors gives the branch that is continuous off the negative real axis.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    check_pole(z, "log_gamma")?;
    let n = shift_count(z);
    let mut shift = Complex64::new(0.0, 0.0);
    for k in 0..n {
        shift += (z + k as f64).ln();
    }
    Ok(stirling(z + n as f64) - shift)
}

fn stirling(w: Complex64) -> Complex64 {
    (w - 0.5) * w.ln() - w + LN_SQRT_2PI + stirling_tail(w)
}

/// Σ B_2n / (2n(2n-1) w^{2n-1}), the correction to the leading Stirling terms.
fn stirling_tail(w: Complex64) -> Complex64 {
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, b) in BERNOULLI.iter().enumerate() {
        let n = (i + 1) as f64;
        let term = pow * (b / (2.0 * n * (2.0 * n - 1.0)));
        acc += term;
        if term.norm() < 1e-17 * acc.norm() {
            break;
        }
        pow *= inv2;
    }
    acc
}

/// ln|Γ(x+iy)| + π|y|/2, evaluated without the cancellation that the two
/// terms suffer separately when |y| is large.
pub fn ln_abs_gamma_plus_half_pi_y(x: f64, y: f64) -> Result<f64> {
    let z = Complex64::new(x, y);
    check_pole(z, "ln_abs_gamma")?;
    let y = y.abs();
    let n = shift_count(z);
    let mut shift = 0.0;
    for k in 0..n {
        shift += Complex64::new(x + k as f64, y).norm().ln();
    }
    let w = Complex64::new(x + n as f64, y);
    // Re[(w - 1/2) ln w - w] + πy/2 with the y-terms combined into y·atan2(x, y).
    let lead = (w.re - 0.5) * w.norm().ln() + y * w.re.atan2(y) - w.re + LN_SQRT_2PI;
    Ok(lead + stirling_tail(w).re - shift)
}

/// 1/Γ(z), which is entire; returns 0 at the poles of Γ.
pub fn rgamma(z: Complex64) -> Complex64 {
    match log_gamma(z) {
        Ok(l) => (-l).exp(),
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

pub fn ln_gamma_real(x: f64) -> Result<f64> {
    Ok(log_gamma(Complex64::new(x, 0.0))?.re)
}

/// Γ(x) for real x off the poles, sign included.
pub fn gamma_real(x: f64) -> Result<f64> {
    let l = log_gamma(Complex64::new(x, 0.0))?;
    Ok((l.exp()).re)
}

/// ψ(z) = Γ'(z)/Γ(z).
pub fn digamma(z: Complex64) -> Result<Complex64> {
    check_pole(z, "digamma")?;
    let n = shift_count(z);
    let mut shift = Complex64::new(0.0, 0.0);
    for k in 0..n {
        shift += (z + k as f64).inv();
    }
    let w = z + n as f64;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut acc = w.ln() - 0.5 * inv;
    let mut pow = inv2;
    for (i, b) in BERNOULLI.iter().enumerate() {
        let n2 = 2.0 * (i + 1) as f64;
        let term = pow * (b / n2);
        acc -= term;
        if term.norm() < 1e-17 * acc.norm().max(1e-300) {
            break;
        }
        pow *= inv2;
    }
    Ok(acc - shift)
}

/// ψ'(z).
pub fn trigamma(z: Complex64) -> Result<Complex64> {
    check_pole(z, "trigamma")?;
    let n = shift_count(z);
    let mut shift = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let u = (z + k as f64).inv();
        shift += u * u;
    }
    let w = z + n as f64;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut acc = inv + 0.5 * inv2;
    let mut pow = inv2 * inv;
    for b in BERNOULLI.iter() {
        let term = pow * *b;
        acc += term;
        if term.norm() < 1e-17 * acc.norm() {
            break;
        }
        pow *= inv2;
    }
    Ok(acc + shift)
}

#[allow(dead_code)]
pub(crate) fn reflection_defect(z: Complex64) -> Result<f64> {
    // log Γ(z) + log Γ(1-z) - log(π / sin πz), reduced mod 2πi
    let lhs = log_gamma(z)? + log_gamma(Complex64::new(1.0, 0.0) - z)?;
    let rhs = (Complex64::new(PI, 0.0) / (z * PI).sin()).ln();
    let d = lhs - rhs;
    let k = (d.im / (2.0 * PI)).round();
    Ok(Complex64::new(d.re, d.im - 2.0 * PI * k).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_gamma_simple_values() {
        assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-14);
        assert!(log_gamma(c(2.0, 0.0)).unwrap().norm() < 1e-14);
        let half = log_gamma(c(0.5, 0.0)).unwrap();
        assert!((half.re - 0.572_364_942_924_700_1).abs() < 1e-14);
        assert!(half.im.abs() < 1e-15);
        let ten = log_gamma(c(10.0, 0.0)).unwrap();
        assert!((ten.re - 362880f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_gamma_frozen_complex_values() {
        // mpmath.loggamma at 40 digits
        let cases = [
            ((3.0, 4.0), (-1.756_626_784_603_784_1, 4.742_664_438_034_657_9)),
            ((0.25, -7.5), (-11.365_620_394_646_528, -7.220_462_821_847_432_4)),
            ((-3.7, 0.2), (-1.636_433_092_562_456_4, -12.663_282_679_635_772)),
            ((30.0, 45.0), (44.414_559_660_235_4, 163.564_752_380_371_47)),
        ];
        for ((x, y), (re, im)) in cases {
            let v = log_gamma(c(x, y)).unwrap();
            assert!((v.re - re).abs() < 1e-12 * re.abs().max(1.0), "{x}+{y}i: {v}");
            assert!((v.im - im).abs() < 1e-12 * im.abs().max(1.0), "{x}+{y}i: {v}");
        }
    }

    #[test]
    fn poles_rejected() {
        for n in 0..5 {
            assert!(matches!(log_gamma(c(-(n as f64), 0.0)), Err(Error::Pole { .. })));
            assert!(matches!(digamma(c(-(n as f64), 0.0)), Err(Error::Pole { .. })));
            assert!(matches!(trigamma(c(-(n as f64), 1e-13)), Err(Error::Pole { .. })));
        }
        assert!(log_gamma(c(-2.0, 1e-9)).is_ok());
    }

    #[test]
    fn digamma_trigamma_identities() {
        let d1 = digamma(c(1.0, 0.0)).unwrap();
        assert!((d1.re + EULER_GAMMA).abs() < 1e-14);
        let dh = digamma(c(0.5, 0.0)).unwrap();
        assert!((dh.re + EULER_GAMMA + 2.0 * 2f64.ln()).abs() < 1e-14);
        let t1 = trigamma(c(1.0, 0.0)).unwrap();
        assert!((t1.re - PI * PI / 6.0).abs() < 1e-14);
        let th = trigamma(c(0.5, 0.0)).unwrap();
        assert!((th.re - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn digamma_frozen_complex_value() {
        // mpmath.digamma(2+3j), mpmath.psi(1, 2+3j)
        let d = digamma(c(2.0, 3.0)).unwrap();
        assert!((d - c(1.207_980_710_710_150_9, 1.104_129_680_587_576_2)).norm() < 1e-13);
        let t = trigamma(c(2.0, 3.0)).unwrap();
        assert!((t - c(0.135_555_427_005_690_92, -0.267_009_992_458_345_64)).norm() < 1e-13);
    }

    #[test]
    fn ln_abs_gamma_shift_matches_direct() {
        for &(x, y) in &[(0.5, 3.0), (1.25, 40.0), (2.0, -7.0), (0.75, 0.0)] {
            let direct = log_gamma(c(x, y)).unwrap().re + PI * y.abs() / 2.0;
            let v = ln_abs_gamma_plus_half_pi_y(x, y).unwrap();
            assert!((direct - v).abs() < 1e-12, "{x} {y}");
        }
        // Large imaginary part: ln|Γ(1/2+iy)| = ln sqrt(π/cosh πy)
        let y = 1e5;
        let exact = 0.5 * (2.0 * PI).ln() - 0.5 * (-2.0 * PI * y).exp().ln_1p();
        let v = ln_abs_gamma_plus_half_pi_y(0.5, y).unwrap();
        assert!((v - exact).abs() < 1e-12, "{v} {exact}");
    }

    #[test]
    fn gamma_real_signs() {
        assert!((gamma_real(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!((gamma_real(5.0).unwrap() - 24.0).abs() < 1e-12);
        assert!((gamma_real(-1.5).unwrap() - 4.0 * PI.sqrt() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn exp_log_gamma_relative_accuracy() {
        // Γ(n+1) = n! exactly representable for n ≤ 22
        let mut fact = 1.0f64;
        for n in 1..=22 {
            fact *= n as f64;
            let g = log_gamma(c(n as f64 + 1.0, 0.0)).unwrap().exp().re;
            assert!((g / fact - 1.0).abs() < 1e-13, "n = {n}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn reflection_identity(x in -8.0f64..8.0, y in prop_oneof![-6.0f64..-0.05, 0.05f64..6.0]) {
            let d = reflection_defect(c(x, y)).unwrap();
            prop_assert!(d < 1e-11, "defect {d} at {x}+{y}i");
        }

        #[test]
        fn digamma_is_derivative_of_log_gamma(r in 0.5f64..20.0, th in -3.0f64..3.0) {
            let z = Complex64::from_polar(r, th);
            prop_assume!(check_pole(z, "t").is_ok());
            prop_assume!((z.re.round() - z.re).abs() > 0.05 || z.im.abs() > 0.05 || z.re > 0.0);
            let h = 1e-5;
            let fd = (log_gamma(z + h).unwrap() - log_gamma(z - h).unwrap()) / (2.0 * h);
            let d = digamma(z).unwrap();
            prop_assert!((fd - d).norm() < 1e-6, "{z}: {fd} vs {d}");
        }

        #[test]
        fn trigamma_is_derivative_of_digamma(r in 0.5f64..20.0, th in -1.5f64..1.5) {
            let z = Complex64::from_polar(r, th);
            let h = 1e-5;
            let fd = (digamma(z + h).unwrap() - digamma(z - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - trigamma(z).unwrap()).norm() < 1e-6 * (1.0 + fd.norm()));
        }

        #[test]
        fn recurrence_gamma_z_plus_one(x in -20.0f64..20.0, y in 0.1f64..20.0) {
            let z = c(x, y);
            let lhs = log_gamma(z + 1.0).unwrap();
            let rhs = log_gamma(z).unwrap() + z.ln();
            let d = lhs - rhs;
            let k = (d.im / (2.0 * PI)).round();
            prop_assert!((d - c(0.0, 2.0 * PI * k)).norm() < 1e-11);
        }
    }
}
