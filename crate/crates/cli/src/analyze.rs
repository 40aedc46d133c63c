//! Semilog rate fits over a finished run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use llmo_core::stats::{fit_semilog, FitError, LinearFit};
use serde::{Deserialize, Serialize};

use crate::output::{directory_hash, hashed_csv, write_atomic};
use crate::CliError;

/// Slopes are only reported for fits at least this good.
pub const MIN_R_SQUARED: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemilogFit {
    pub fit: LinearFit,
    /// `fit.slope` when `R² ≥ MIN_R_SQUARED`.
    pub slope: Option<f64>,
}

/// Fits `log10 gap` against `t`; non-positive gaps are skipped.
pub fn fit_gap_series(ts: &[f64], gaps: &[f64]) -> Result<SemilogFit, FitError> {
    let fit = fit_semilog(ts, gaps)?;
    Ok(SemilogFit {
        slope: (fit.r_squared >= MIN_R_SQUARED).then_some(fit.slope),
        fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRate {
    pub curve: String,
    pub scheme: String,
    pub sampler: String,
    pub agents: usize,
    pub result: Result<SemilogFit, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub sampler: String,
    pub agents: usize,
    pub measured_ratio: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub config_hash: Option<String>,
    pub curves: Vec<CurveRate>,
    /// `slope(L) / slope(1)` against the predicted `L`.
    pub sweep: Vec<SweepRow>,
}

/// Gap points keyed by `(curve, scheme, sampler, agents)`.
pub type GapSeries = BTreeMap<(String, String, String, usize), Vec<(usize, f64)>>;

#[derive(Debug, Deserialize)]
struct GapRow {
    curve: String,
    scheme: String,
    sampler: String,
    agents: usize,
    t: usize,
    mean_gap: f64,
}

/// Rate report from raw gap series.
pub fn rates_from_series(series: &GapSeries) -> RateReport {
    let mut curves = Vec::new();
    for ((curve, scheme, sampler, agents), points) in series {
        let (ts, gaps): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|(t, _)| *t >= 1)
            .map(|&(t, g)| (t as f64, g))
            .unzip();
        curves.push(CurveRate {
            curve: curve.clone(),
            scheme: scheme.clone(),
            sampler: sampler.clone(),
            agents: *agents,
            result: fit_gap_series(&ts, &gaps).map_err(|e| e.to_string()),
        });
    }
    let mut sweep = Vec::new();
    let llmo = |c: &&CurveRate| c.scheme == "llmo";
    for base in curves.iter().filter(llmo).filter(|c| c.agents == 1) {
        let Some(s1) = base.result.as_ref().ok().and_then(|f| f.slope) else {
            continue;
        };
        for c in curves.iter().filter(llmo).filter(|c| c.sampler == base.sampler) {
            if let Some(s) = c.result.as_ref().ok().and_then(|f| f.slope) {
                let ratio = s / s1;
                sweep.push(SweepRow {
                    sampler: c.sampler.clone(),
                    agents: c.agents,
                    measured_ratio: ratio,
                    relative_error: (ratio - c.agents as f64).abs() / c.agents as f64,
                });
            }
        }
    }
    RateReport {
        config_hash: None,
        curves,
        sweep,
    }
}

fn load_gaps(path: &Path) -> Result<GapSeries, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut series: BTreeMap<_, Vec<(usize, f64)>> = BTreeMap::new();
    for row in reader.deserialize::<GapRow>() {
        let r = row.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        series
            .entry((r.curve, r.scheme, r.sampler, r.agents))
            .or_default()
            .push((r.t, r.mean_gap));
    }
    Ok(series)
}

impl RateReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("curve,agents,points,slope,intercept,r_squared,slope_reported,status\n");
        for c in &self.curves {
            match &c.result {
                Ok(f) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},ok",
                        c.curve,
                        c.agents,
                        f.fit.points,
                        f.fit.slope,
                        f.fit.intercept,
                        f.fit.r_squared,
                        f.slope.map(|v| v.to_string()).unwrap_or_default()
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "{},{},,,,,,{e}", c.curve, c.agents);
                }
            }
        }
        s
    }

    pub fn sweep_csv(&self) -> String {
        let mut s = String::from("sampler,agents,predicted_ratio,measured_ratio,relative_error\n");
        for r in &self.sweep {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.sampler, r.agents, r.agents, r.measured_ratio, r.relative_error
            );
        }
        s
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.curves {
            out.push(match &c.result {
                Ok(f) => match f.slope {
                    Some(s) => format!("{}: slope {s:.6e} per step, R^2 {:.6}", c.curve, f.fit.r_squared),
                    None => format!(
                        "{}: R^2 {:.6} below {MIN_R_SQUARED}, slope not reported",
                        c.curve, f.fit.r_squared
                    ),
                },
                Err(e) => format!("{}: {e}", c.curve),
            });
        }
        for r in &self.sweep {
            out.push(format!(
                "{} L={}: slope ratio {:.4} vs predicted {} ({:.2}% off)",
                r.sampler,
                r.agents,
                r.measured_ratio,
                r.agents,
                100.0 * r.relative_error
            ));
        }
        out
    }
}

/// `llmo analyze`: refuses mixed-config directories, fits every gap
/// curve and writes `rate_report.csv` and `rate_sweep.csv`.
pub fn analyze_rates(dir: &Path) -> Result<RateReport, CliError> {
    let hash = directory_hash(dir)?;
    let gaps = dir.join("gap_vs_t.csv");
    if !gaps.exists() {
        return Err(CliError::Invalid(vec![format!(
            "{} has no gap_vs_t.csv",
            dir.display()
        )]));
    }
    let mut report = rates_from_series(&load_gaps(&gaps)?);
    if report.curves.iter().all(|c| c.result.is_err()) {
        let detail = report
            .curves
            .iter()
            .filter_map(|c| c.result.as_ref().err())
            .next()
            .cloned();
        return Err(CliError::Fit(detail.unwrap_or_else(|| "no curves".into())));
    }
    report.config_hash = hash.clone();
    if let Some(h) = &hash {
        write_atomic(&dir.join("rate_report.csv"), hashed_csv(h, &report.to_csv()).as_bytes())?;
        write_atomic(
            &dir.join("rate_sweep.csv"),
            hashed_csv(h, &report.sweep_csv()).as_bytes(),
        )?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_gives_log_q() {
        let q: f64 = 0.83;
        let ts: Vec<f64> = (1..=40).map(f64::from).collect();
        let gaps: Vec<f64> = ts.iter().map(|&t| 2.5 * q.powf(t)).collect();
        let f = fit_gap_series(&ts, &gaps).unwrap();
        assert!((f.slope.unwrap() - q.log10()).abs() < 1e-12);
    }

    #[test]
    fn four_points_is_a_fit_error() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            fit_gap_series(&ts, &[1.0, 0.5, 0.25, 0.125]),
            Err(FitError::TooFewPoints(4))
        );
    }

    #[test]
    fn noisy_series_withholds_the_slope() {
        let ts: Vec<f64> = (1..=30).map(f64::from).collect();
        let gaps: Vec<f64> = ts
            .iter()
            .map(|&t| 0.9f64.powf(t) * if (t as usize).is_multiple_of(2) { 20.0 } else { 0.05 })
            .collect();
        let f = fit_gap_series(&ts, &gaps).unwrap();
        assert!(f.fit.r_squared < MIN_R_SQUARED);
        assert_eq!(f.slope, None);
    }
}
