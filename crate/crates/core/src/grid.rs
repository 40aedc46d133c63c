//! Quantized action grid and exhaustive reward tables over it.
//!
//! A grid has `G` evenly spaced levels per dimension, so `G^D` points. Points
//! are numbered big-endian over the per-dimension level indices: dimension 0
//! is the most significant digit. Populations of `P` grid points are numbered
//! the same way with each row's point index as one base-`G^D` digit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::population::{ActionVector, Bounds, Population, PopulationError};
use crate::reward::{RewardError, RewardModel};

/// Default cap on enumerated points or states.
pub const DEFAULT_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{count} entries exceed the configured cap of {cap}")]
    Capacity { count: u128, cap: usize },
    #[error("grid needs at least one level per dimension")]
    NoLevels,
    #[error("population does not match the grid: {0}")]
    Shape(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Population(#[from] PopulationError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    levels: usize,
    bounds: Bounds,
}

impl Grid {
    pub fn new(levels: usize, bounds: Bounds) -> Result<Self, GridError> {
        if levels == 0 {
            return Err(GridError::NoLevels);
        }
        Ok(Self { levels, bounds })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Number of grid points `G^D`, or `None` on overflow.
    pub fn point_count(&self) -> Option<usize> {
        checked_pow(self.levels, self.dim())
    }

    /// Number of populations of `rows` points, `G^(rows·D)`.
    pub fn state_count(&self, rows: usize) -> Option<usize> {
        checked_pow(self.point_count()?, rows)
    }

    pub fn level_value(&self, dim: usize, level: usize) -> f64 {
        let lo = self.bounds.lower()[dim];
        let hi = self.bounds.upper()[dim];
        if self.levels == 1 {
            return lo;
        }
        if level == self.levels - 1 {
            return hi;
        }
        lo + (hi - lo) * level as f64 / (self.levels - 1) as f64
    }

    /// Nearest level to `value` in dimension `dim` (values are clamped into the box first).
    pub fn snap(&self, dim: usize, value: f64) -> usize {
        let lo = self.bounds.lower()[dim];
        let hi = self.bounds.upper()[dim];
        if self.levels == 1 || hi <= lo {
            return 0;
        }
        let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
        ((t * (self.levels - 1) as f64).round() as usize).min(self.levels - 1)
    }

    pub fn point_levels(&self, mut point: usize) -> Vec<usize> {
        let mut levels = vec![0; self.dim()];
        for slot in levels.iter_mut().rev() {
            *slot = point % self.levels;
            point /= self.levels;
        }
        levels
    }

    pub fn point_index(&self, levels: &[usize]) -> usize {
        levels.iter().fold(0, |acc, &l| acc * self.levels + l)
    }

    pub fn point_values(&self, point: usize) -> Vec<f64> {
        self.point_levels(point)
            .into_iter()
            .enumerate()
            .map(|(d, l)| self.level_value(d, l))
            .collect()
    }

    pub fn point_action(&self, point: usize) -> ActionVector {
        ActionVector::new(self.point_values(point), &self.bounds).expect("grid points lie in bounds")
    }

    /// Nearest grid point of an arbitrary in-box action.
    pub fn snap_point(&self, values: &[f64]) -> usize {
        let levels: Vec<usize> = values.iter().enumerate().map(|(d, &v)| self.snap(d, v)).collect();
        self.point_index(&levels)
    }

    pub fn state_rows(&self, state: usize, rows: usize) -> Vec<usize> {
        let base = self.point_count().expect("grid size fits usize");
        let mut out = vec![0; rows];
        let mut s = state;
        for slot in out.iter_mut().rev() {
            *slot = s % base;
            s /= base;
        }
        out
    }

    pub fn state_index(&self, points: &[usize]) -> usize {
        let base = self.point_count().expect("grid size fits usize");
        points.iter().fold(0, |acc, &p| acc * base + p)
    }

    pub fn decode_state(&self, state: usize, rows: usize) -> Population {
        let actions = self
            .state_rows(state, rows)
            .into_iter()
            .map(|p| self.point_action(p))
            .collect();
        Population::new(actions).expect("rows >= 1")
    }

    /// Snaps every row of `pop` onto the grid and returns the state index.
    pub fn encode_population(&self, pop: &Population) -> Result<usize, GridError> {
        if pop.dim() != self.dim() {
            return Err(GridError::Shape(format!(
                "population has {} columns, grid has {}",
                pop.dim(),
                self.dim()
            )));
        }
        let points: Vec<usize> = pop.actions().iter().map(|a| self.snap_point(a.values())).collect();
        Ok(self.state_index(&points))
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Exact rewards at every grid point plus the maximizing set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRewardTable {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Points attaining the maximum, ascending.
    pub argmax: Vec<usize>,
    pub max: f64,
}

impl GridRewardTable {
    pub fn reward(&self, point: usize) -> f64 {
        self.values[point]
    }

    pub fn is_optimal(&self, point: usize) -> bool {
        self.values[point] == self.max
    }
}

/// Evaluates `reward` at all `G^D` grid points.
pub fn grid_reward_table<R: RewardModel + ?Sized>(
    reward: &R,
    grid: &Grid,
    cap: usize,
) -> Result<GridRewardTable, GridError> {
    let count = grid.point_count().ok_or(GridError::Capacity {
        count: (grid.levels() as u128).saturating_pow(grid.dim() as u32),
        cap,
    })?;
    if count > cap {
        return Err(GridError::Capacity {
            count: count as u128,
            cap,
        });
    }
    let values = (0..count)
        .map(|p| reward.evaluate(&grid.point_values(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == max)
        .map(|(i, _)| i)
        .collect();
    Ok(GridRewardTable {
        grid: grid.clone(),
        values,
        argmax,
        max,
    })
}

impl RewardModel for GridRewardTable {
    /// Reward of the nearest grid point.
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        self.grid
            .bounds()
            .check(x)
            .map_err(|e| RewardError::Bounds(e.to_string()))?;
        Ok(self.values[self.grid.snap_point(x)])
    }
}
