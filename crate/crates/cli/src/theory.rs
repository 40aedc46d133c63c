//! `llmo verify-theory`: the exact Markov-chain checks on a small grid.

use std::fmt::Write as _;
use std::path::Path;

use llmo_core::theory::{run_theory_suite, TheoryReport, TheorySetup};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::output::{hashed_csv, write_atomic};
use crate::CliError;

pub fn load_setup(path: &Path) -> Result<TheorySetup, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    toml::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn validate_setup(s: &TheorySetup) -> Result<(), CliError> {
    let mut errs = Vec::new();
    if s.levels < 2 {
        errs.push("levels must be at least 2".to_string());
    }
    if s.rows == 0 || s.dim == 0 {
        errs.push("rows and dim must be at least 1".into());
    }
    if s.instances < 2 {
        errs.push("instances must be at least 2 (the heterogeneous check pairs two)".into());
    }
    if s.horizon < 6 {
        errs.push("horizon must be at least 6 for the semilog fits".into());
    }
    if s.max_agents == 0 {
        errs.push("max_agents must be at least 1".into());
    }
    if s.mc_runs == 0 {
        errs.push("mc_runs must be at least 1".into());
    }
    if !(s.temperature.is_finite() && s.temperature > 0.0) {
        errs.push("temperature must be positive".into());
    }
    if !(s.logit_scale.is_finite() && s.logit_scale >= 0.0) {
        errs.push("logit_scale must be finite and non-negative".into());
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(errs))
    }
}

pub fn setup_hash(s: &TheorySetup) -> String {
    let canon = toml::to_string(s).expect("setup serializes");
    Sha256::digest(canon.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
struct ReportFile<'a> {
    config_hash: &'a str,
    wall_time_s: f64,
    #[serde(flatten)]
    report: &'a TheoryReport,
}

/// Runs the suite and, when `out` is given, writes the report files there.
pub fn verify_theory(setup: &TheorySetup, out: Option<&Path>) -> Result<TheoryReport, CliError> {
    validate_setup(setup)?;
    let start = std::time::Instant::now();
    let report = run_theory_suite(setup)?;
    if let Some(dir) = out {
        let hash = setup_hash(setup);
        let file = ReportFile {
            config_hash: &hash,
            wall_time_s: start.elapsed().as_secs_f64(),
            report: &report,
        };
        let json = serde_json::to_string_pretty(&file).map_err(|e| CliError::Parse(e.to_string()))?;
        write_atomic(&dir.join("theory_report.json"), json.as_bytes())?;
        let mut csv = String::from("agents,q_max,q_max_row_level,predicted,slope\n");
        for r in &report.power_law {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                r.agents, r.q_max, r.q_max_row_level, r.predicted, r.slope
            );
        }
        write_atomic(&dir.join("power_law.csv"), hashed_csv(&hash, &csv).as_bytes())?;
        let canon = toml::to_string(setup).expect("setup serializes");
        write_atomic(&dir.join("theory.toml"), hashed_csv(&hash, &canon).as_bytes())?;
    }
    Ok(report)
}
