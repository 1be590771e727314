use serde::Serialize;

use crate::error::{Error, Result};

/// Fraction of the fit window discarded as transient.
const BURN_IN_FRACTION: f64 = 0.2;
const MIN_POINTS: usize = 10;

/// Fit of `r_k ≈ C ρ^{k−K}` to a residual series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rho: f64,
    pub r_squared: f64,
    /// Index `K` where the fit starts.
    pub burn_in: usize,
    /// Fitted residual at `K`.
    pub constant: f64,
    /// Number of points used.
    pub points: usize,
    /// False when `ρ ≥ 1`.
    pub contractive: bool,
}

/// [`estimate_rate_sampled`] with `k = 0, 1, 2, …` and a floor of
/// `100 ε · max r`.
pub fn estimate_rate(series: &[f64]) -> Result<RateEstimate> {
    let ks: Vec<f64> = (0..series.len()).map(|k| k as f64).collect();
    estimate_rate_sampled(&ks, series, None)
}

/// Least-squares line through `(k, ln r_k)`.
///
/// The window ends before the first residual at or below `floor` (default
/// `100 ε · max r`); the first 20% of the window is discarded.
pub fn estimate_rate_sampled(ks: &[f64], series: &[f64], floor: Option<f64>) -> Result<RateEstimate> {
    if ks.len() != series.len() {
        return Err(Error::DimensionMismatch {
            expected: series.len(),
            got: ks.len(),
        });
    }
    if series.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Estimation("residuals must be finite and non-negative".into()));
    }
    let peak = series.iter().copied().fold(0.0, f64::max);
    let floor = floor.unwrap_or(100.0 * f64::EPSILON * peak);
    let end = series.iter().position(|&r| r <= floor || r == 0.0).unwrap_or(series.len());
    let burn_in = (BURN_IN_FRACTION * end as f64).floor() as usize;
    let points = end - burn_in;
    if points < MIN_POINTS {
        return Err(Error::Estimation(format!(
            "converged too fast to fit: {points} usable residuals above the floor {floor:e}"
        )));
    }
    let xs = &ks[burn_in..end];
    let ys: Vec<f64> = series[burn_in..end].iter().map(|r| r.ln()).collect();
    let n = points as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Estimation("all sample positions coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    let rho = slope.exp();
    Ok(RateEstimate {
        rho,
        r_squared,
        burn_in,
        constant: (intercept + slope * xs[0]).exp(),
        points,
        contractive: rho < 1.0,
    })
}
