use llmo_core::trace::IterationRecord;
use llmo_core::{ExperimentTrace, RewardModel};

use crate::BaselineError;

/// Evaluates every row, rejecting non-finite rewards.
pub(crate) fn evaluate_rows<R: RewardModel + ?Sized>(reward: &R, rows: &[Vec<f64>]) -> Result<Vec<f64>, BaselineError> {
    rows.iter()
        .enumerate()
        .map(|(row, x)| {
            let r = reward
                .evaluate(x)
                .map_err(|source| BaselineError::Reward { row, source })?;
            if r.is_finite() {
                Ok(r)
            } else {
                Err(BaselineError::NonFinite { row })
            }
        })
        .collect()
}

/// Accumulates best-so-far records in the optimizer's trace layout.
pub(crate) struct TraceBuilder {
    initial: Option<IterationRecord>,
    records: Vec<IterationRecord>,
    best_action: Vec<f64>,
    best_reward: f64,
    best_iteration: usize,
    evaluations: usize,
}

impl TraceBuilder {
    pub fn new() -> Self {
        Self {
            initial: None,
            records: Vec::new(),
            best_action: Vec::new(),
            best_reward: f64::NEG_INFINITY,
            best_iteration: 0,
            evaluations: 0,
        }
    }

    pub fn best_reward(&self) -> f64 {
        self.best_reward
    }

    /// `evaluated` are this step's new evaluations; `current` is the
    /// population the mean and violation are reported for.
    pub fn push<R: RewardModel + ?Sized>(
        &mut self,
        t: usize,
        evaluated: &[Vec<f64>],
        rewards: &[f64],
        current: (&[Vec<f64>], &[f64]),
        reward: &R,
    ) {
        self.evaluations += evaluated.len();
        for (x, &r) in evaluated.iter().zip(rewards) {
            if r > self.best_reward {
                self.best_reward = r;
                self.best_action = x.clone();
                self.best_iteration = t;
            }
        }
        let (rows, values) = current;
        let n = values.len().max(1) as f64;
        let record = IterationRecord {
            t,
            best_reward: self.best_reward,
            example_best: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_reward: values.iter().sum::<f64>() / n,
            violation: rows.iter().map(|x| reward.violation(x)).sum::<f64>() / n,
            failures: 0,
            failed: false,
            evaluations: self.evaluations,
            examples: None,
            generated: None,
        };
        if t == 0 {
            self.initial = Some(record);
        } else {
            self.records.push(record);
        }
    }

    pub fn finish(self) -> ExperimentTrace {
        ExperimentTrace {
            initial: self.initial.expect("initial record pushed before finish"),
            records: self.records,
            best_action: self.best_action,
            best_reward: self.best_reward,
            best_iteration: self.best_iteration,
        }
    }
}
