//! Ordinary least squares with a two-sided t-test on the slope.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::student_t_two_sided;

/// Minimum points per fit; leaves at least one residual degree of freedom.
pub const MIN_POINTS: usize = 3;

/// Residual sum of squares at or below this fraction of the total sum of
/// squares counts as a perfect fit.
const PERFECT_FIT_RATIO: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    /// Two-sided p-value for the null hypothesis of zero slope.
    pub p_value: f64,
    pub r_value: f64,
    pub n_points: usize,
}

/// Least-squares line through `points`.
///
/// A slope of exactly zero has p = 1. A perfect fit with nonzero slope has
/// zero standard error and p = 0.
pub fn ols_fit(points: &[(f64, f64)]) -> Result<RegressionResult> {
    let n = points.len();
    if n < MIN_POINTS {
        return Err(Error::InsufficientData("fewer than 3 points"));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InsufficientData("non-finite coordinate"));
    }
    let x0 = points[0].0;
    if points.iter().all(|(x, _)| *x == x0) {
        return Err(Error::InsufficientData("all x values identical"));
    }

    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = points
        .iter()
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let df = nf - 2.0;
    let r_value = if syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };

    let (stderr_slope, p_value) = if slope == 0.0 {
        ((ssr / df / sxx).sqrt(), 1.0)
    } else if ssr <= PERFECT_FIT_RATIO * syy {
        (0.0, 0.0)
    } else {
        let se = (ssr / df / sxx).sqrt();
        (se, student_t_two_sided(slope / se, df))
    };

    Ok(RegressionResult {
        slope,
        intercept,
        stderr_slope,
        p_value,
        r_value,
        n_points: n,
    })
}
