//! Small dense least-squares helpers shared by the fitting routines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares solution of A x ≈ b after scaling every column to unit
/// norm. Returns the solution and the 2-norm condition number of the scaled
/// matrix; errors when that condition number exceeds `max_cond`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, max_cond: f64, what: &'static str) -> Result<(DVector<f64>, f64)> {
    let ncols = a.ncols();
    let scales: Vec<f64> = (0..ncols).map(|j| a.column(j).norm()).collect();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        if *s == 0.0 {
            return Err(Error::IllConditioned { what, cond: f64::INFINITY });
        }
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= max_cond) {
        return Err(Error::IllConditioned { what, cond });
    }
    let y = svd
        .solve(b, 0.0)
        .map_err(|e| Error::Degenerate { what, msg: e.to_string() })?;
    let x = DVector::from_iterator(ncols, y.iter().zip(&scales).map(|(v, s)| v / s));
    Ok((x, cond))
}

/// Ordinary linear regression y ≈ slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    LineFit { slope, intercept: my - slope * mx, correlation: sxy / (sxx * syy).sqrt() }
}
