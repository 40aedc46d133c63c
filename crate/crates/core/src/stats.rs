//! Least-squares line fits for semilog rate analysis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_FIT_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("abscissae are all equal")]
    Degenerate,
    #[error("non-finite value in the data")]
    NotFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<LinearFit, FitError> {
    let n = points.len();
    if n < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints(n));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FitError::NotFinite);
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Fits `log10 y` against `t`, skipping non-positive values.
pub fn fit_semilog(ts: &[f64], ys: &[f64]) -> Result<LinearFit, FitError> {
    let points: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&t, &y)| (t, y.log10()))
        .collect();
    fit_line(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_geometric_series() {
        let q: f64 = 0.37;
        let ts: Vec<f64> = (0..30).map(f64::from).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| 2.0 * q.powf(t)).collect();
        let f = fit_semilog(&ts, &ys).unwrap();
        assert!((f.slope - q.log10()).abs() < 1e-12);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert_eq!(fit_line(&[(0.0, 1.0); 4]), Err(FitError::TooFewPoints(4)));
        assert_eq!(fit_line(&[(1.0, 1.0); 6]), Err(FitError::Degenerate));
    }
}
