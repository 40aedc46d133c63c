//! Broadcast channel with a sum-power constraint `Σ x_d ≤ 1`.

use llmo_core::{RewardError, RewardModel};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{check_unit_box, WirelessError};

pub const DEFAULT_PENALTY: f64 = -1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcModel {
    /// `|h_d|²` per user.
    gains: Vec<f64>,
    pub p_tx: f64,
    /// Reward handed back for infeasible actions in penalty mode.
    pub penalty: f64,
}

impl BcModel {
    pub fn new(channel: &[Complex64], p_tx: f64, penalty: f64) -> Result<Self, WirelessError> {
        Self::from_gains(channel.iter().map(|h| h.norm_sqr()).collect(), p_tx, penalty)
    }

    pub fn from_gains(gains: Vec<f64>, p_tx: f64, penalty: f64) -> Result<Self, WirelessError> {
        if gains.is_empty() || gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(WirelessError::InvalidModel(
                "gains must be finite, non-negative and non-empty".into(),
            ));
        }
        if !(p_tx > 0.0 && p_tx.is_finite()) {
            return Err(WirelessError::InvalidModel("P_tx must be positive".into()));
        }
        // SE is never negative, so any negative penalty sits below every feasible reward.
        if !(penalty < 0.0 && penalty.is_finite()) {
            return Err(WirelessError::InvalidModel(format!(
                "penalty {penalty} must be negative"
            )));
        }
        Ok(Self { gains, p_tx, penalty })
    }

    pub fn users(&self) -> usize {
        self.gains.len()
    }

    pub fn gain(&self, d: usize) -> f64 {
        self.gains[d]
    }

    pub fn rates_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let total: f64 = x.iter().sum();
        self.gains
            .iter()
            .zip(x)
            .map(|(&g, &xd)| {
                let others = total - xd;
                (self.p_tx * g * xd / (1.0 + self.p_tx * g * others)).ln_1p()
            })
            .collect()
    }
}

pub fn sum_power_violation(x: &[f64]) -> f64 {
    (x.iter().sum::<f64>() - 1.0).max(0.0)
}

pub fn bc_se(x: &[f64], model: &BcModel) -> Result<f64, WirelessError> {
    check_unit_box(x, model.users())?;
    Ok(model.rates_unchecked(x).iter().sum())
}

pub fn bc_penalized(x: &[f64], model: &BcModel) -> Result<f64, WirelessError> {
    let se = bc_se(x, model)?;
    Ok(if sum_power_violation(x) > 0.0 {
        model.penalty
    } else {
        se
    })
}

/// How the sum-power constraint reaches the optimizer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Stated in the prompt; the reward itself is unconstrained.
    Language,
    /// Infeasible actions score the model's penalty.
    Penalty,
    #[default]
    None,
}

#[derive(Clone, Debug)]
pub struct BcReward {
    pub model: BcModel,
    pub mode: ConstraintMode,
}

impl BcReward {
    pub fn new(model: BcModel, mode: ConstraintMode) -> Self {
        Self { model, mode }
    }
}

impl RewardModel for BcReward {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        let r = match self.mode {
            ConstraintMode::Penalty => bc_penalized(x, &self.model),
            ConstraintMode::Language | ConstraintMode::None => bc_se(x, &self.model),
        };
        r.map_err(RewardError::from)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        sum_power_violation(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit2() -> BcModel {
        BcModel::from_gains(vec![1.0, 1.0], 10.0, DEFAULT_PENALTY).unwrap()
    }

    #[test]
    fn second_user_silent() {
        assert_relative_eq!(bc_se(&[1.0, 0.0], &unit2()).unwrap(), 11f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(
            bc_se(&[1.0, 0.0], &unit2()).unwrap(),
            2.397_895_272_798_371,
            epsilon = 1e-15
        );
    }

    #[test]
    fn half_split() {
        let se = bc_se(&[0.5, 0.5], &unit2()).unwrap();
        assert_relative_eq!(se, 2.0 * (1.0 + 5.0 / 6.0f64).ln(), epsilon = 1e-15);
        assert!((se - 1.2123).abs() < 1e-4);
    }

    #[test]
    fn infeasible_is_penalized() {
        let x = [0.6, 0.6];
        assert_relative_eq!(sum_power_violation(&x), 0.2, epsilon = 1e-15);
        assert_eq!(bc_penalized(&x, &unit2()).unwrap(), -1000.0);
        let r = BcReward::new(unit2(), ConstraintMode::Penalty);
        assert_eq!(r.evaluate(&x).unwrap(), -1000.0);
        assert_relative_eq!(r.violation(&x), 0.2, epsilon = 1e-15);
        let plain = BcReward::new(unit2(), ConstraintMode::Language);
        assert!(plain.evaluate(&x).unwrap() > 0.0);
    }

    #[test]
    fn boundary_of_simplex_is_feasible() {
        assert_eq!(sum_power_violation(&[0.25, 0.75]), 0.0);
        let x = [0.25, 0.75];
        assert_eq!(bc_penalized(&x, &unit2()).unwrap(), bc_se(&x, &unit2()).unwrap());
    }

    #[test]
    fn penalty_must_be_negative() {
        assert!(BcModel::from_gains(vec![1.0], 10.0, 0.0).is_err());
        assert!(BcModel::from_gains(vec![1.0], 10.0, 5.0).is_err());
        assert!(BcModel::from_gains(vec![], 10.0, -1.0).is_err());
    }
}
