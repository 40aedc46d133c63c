//! Per-iteration records and their CSV/JSON forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::population::Population;

pub const TRACE_CSV_HEADER: &str = "t,best_reward,example_best,mean_reward,violation,failures,evaluations";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationDump {
    pub rows: Vec<Vec<f64>>,
    pub rewards: Option<Vec<f64>>,
}

impl From<&Population> for PopulationDump {
    fn from(p: &Population) -> Self {
        Self {
            rows: p.rows(),
            rewards: p.rewards().map(<[f64]>::to_vec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub best_reward: f64,
    /// Best reward among the in-context examples after the update.
    pub example_best: f64,
    /// Mean reward of the in-context examples after the update.
    pub mean_reward: f64,
    /// Mean constraint violation of the in-context examples.
    pub violation: f64,
    /// Failed agent calls during this iteration, retries included.
    pub failures: usize,
    /// Every retry was exhausted; the examples were kept unchanged.
    pub failed: bool,
    /// Cumulative reward evaluations including initialization.
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples: Option<PopulationDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<PopulationDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    /// State after initialization (t = 0).
    pub initial: IterationRecord,
    /// One record per iteration `t = 1..=T`.
    pub records: Vec<IterationRecord>,
    pub best_action: Vec<f64>,
    pub best_reward: f64,
    pub best_iteration: usize,
}

impl ExperimentTrace {
    pub fn best_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_reward).collect()
    }

    /// CSV with header [`TRACE_CSV_HEADER`],
    /// optionally preceded by a `# config_hash:` line.
    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        write_trace_csv(&self.records, config_hash)
    }
}

pub fn write_trace_csv(records: &[IterationRecord], config_hash: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = config_hash {
        let _ = writeln!(out, "# config_hash: {h}");
    }
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t, r.best_reward, r.example_best, r.mean_reward, r.violation, r.failures, r.evaluations
        );
    }
    out
}
