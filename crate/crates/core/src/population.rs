//! Action vectors, populations and their bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopulationError {
    #[error("action has {got} dimensions, bounds have {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("value {value} in dimension {dim} is outside [{lower}, {upper}]")]
    OutOfBounds {
        dim: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("value in dimension {dim} is not finite")]
    NotFinite { dim: usize },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("population must hold at least one action")]
    Empty,
    #[error("{rewards} rewards for {actions} actions")]
    RewardCount { actions: usize, rewards: usize },
    #[error("population has not been evaluated")]
    NotEvaluated,
    #[error("need {needed} evaluated rows, memory holds {available}")]
    NotEnoughRows { needed: usize, available: usize },
}

/// Per-dimension box `[lower[d], upper[d]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PopulationError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(PopulationError::InvalidBounds(format!(
                "{} lower vs {} upper entries",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(PopulationError::InvalidBounds(format!("dimension {d}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Same interval in every one of `dim` dimensions.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, PopulationError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn unit(dim: usize) -> Self {
        Self::uniform(dim, 0.0, 1.0).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn check(&self, values: &[f64]) -> Result<(), PopulationError> {
        if values.len() != self.dim() {
            return Err(PopulationError::Dimension {
                expected: self.dim(),
                got: values.len(),
            });
        }
        for (d, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(PopulationError::NotFinite { dim: d });
            }
            if v < self.lower[d] || v > self.upper[d] {
                return Err(PopulationError::OutOfBounds {
                    dim: d,
                    value: v,
                    lower: self.lower[d],
                    upper: self.upper[d],
                });
            }
        }
        Ok(())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionVector {
        let values = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect();
        ActionVector { values }
    }
}

/// A bounds-checked action. Construction never clips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    values: Vec<f64>,
}

impl ActionVector {
    pub fn new(values: Vec<f64>, bounds: &Bounds) -> Result<Self, PopulationError> {
        bounds.check(&values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for ActionVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// `P` actions with optional paired rewards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    actions: Vec<ActionVector>,
    rewards: Option<Vec<f64>>,
}

impl Population {
    pub fn new(actions: Vec<ActionVector>) -> Result<Self, PopulationError> {
        if actions.is_empty() {
            return Err(PopulationError::Empty);
        }
        Ok(Self { actions, rewards: None })
    }

    pub fn evaluated(actions: Vec<ActionVector>, rewards: Vec<f64>) -> Result<Self, PopulationError> {
        let mut pop = Self::new(actions)?;
        pop.set_rewards(rewards)?;
        Ok(pop)
    }

    /// Convenience for tests and fixtures: rows of raw values, checked against `bounds`.
    pub fn from_rows(rows: &[Vec<f64>], bounds: &Bounds) -> Result<Self, PopulationError> {
        let actions = rows
            .iter()
            .map(|r| ActionVector::new(r.clone(), bounds))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(actions)
    }

    pub fn set_rewards(&mut self, rewards: Vec<f64>) -> Result<(), PopulationError> {
        if rewards.len() != self.actions.len() {
            return Err(PopulationError::RewardCount {
                actions: self.actions.len(),
                rewards: rewards.len(),
            });
        }
        self.rewards = Some(rewards);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.actions[0].dim()
    }

    pub fn actions(&self) -> &[ActionVector] {
        &self.actions
    }

    pub fn rewards(&self) -> Option<&[f64]> {
        self.rewards.as_deref()
    }

    pub fn is_evaluated(&self) -> bool {
        self.rewards.is_some()
    }

    pub fn require_rewards(&self) -> Result<&[f64], PopulationError> {
        self.rewards().ok_or(PopulationError::NotEvaluated)
    }

    /// Index and value of the highest reward; the first row wins ties.
    pub fn argmax(&self) -> Result<(usize, f64), PopulationError> {
        let rewards = self.require_rewards()?;
        let mut best = (0, rewards[0]);
        for (i, &r) in rewards.iter().enumerate().skip(1) {
            if r > best.1 {
                best = (i, r);
            }
        }
        Ok(best)
    }

    pub fn mean_reward(&self) -> Result<f64, PopulationError> {
        let r = self.require_rewards()?;
        Ok(r.iter().sum::<f64>() / r.len() as f64)
    }

    /// Row-wise concatenation; the result is evaluated only if every part is.
    pub fn concat(parts: &[Population]) -> Result<Self, PopulationError> {
        let actions: Vec<ActionVector> = parts.iter().flat_map(|p| p.actions.iter().cloned()).collect();
        let mut pop = Self::new(actions)?;
        if parts.iter().all(Population::is_evaluated) {
            let rewards = parts
                .iter()
                .flat_map(|p| p.rewards.as_ref().unwrap().iter().copied())
                .collect();
            pop.rewards = Some(rewards);
        }
        Ok(pop)
    }

    /// Rows `indices` in the given order, carrying rewards along.
    pub fn select(&self, indices: &[usize]) -> Result<Self, PopulationError> {
        let actions = indices.iter().map(|&i| self.actions[i].clone()).collect();
        let mut pop = Self::new(actions)?;
        if let Some(r) = &self.rewards {
            pop.rewards = Some(indices.iter().map(|&i| r[i]).collect());
        }
        Ok(pop)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.actions.iter().map(|a| a.values.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_bounds_is_rejected_not_clipped() {
        let b = Bounds::unit(2);
        let err = ActionVector::new(vec![0.5, 1.2], &b).unwrap_err();
        assert!(matches!(err, PopulationError::OutOfBounds { dim: 1, .. }));
        assert!(ActionVector::new(vec![0.0, 1.0], &b).is_ok());
        assert!(matches!(
            ActionVector::new(vec![f64::NAN, 0.0], &b),
            Err(PopulationError::NotFinite { dim: 0 })
        ));
    }

    #[test]
    fn empty_population_rejected() {
        assert_eq!(Population::new(vec![]), Err(PopulationError::Empty));
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let b = Bounds::unit(1);
        let pop = Population::evaluated(
            Population::from_rows(&[vec![0.1], vec![0.2], vec![0.3]], &b)
                .unwrap()
                .actions,
            vec![0.4, 0.9, 0.9],
        )
        .unwrap();
        assert_eq!(pop.argmax().unwrap(), (1, 0.9));
    }

    #[test]
    fn invalid_bounds() {
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }
}
