//! Enumeration and total ordering of grid populations.

use std::cmp::Ordering;

use crate::grid::{grid_reward_table, Grid, GridRewardTable};
use crate::population::Population;
use crate::reward::RewardModel;

use super::MarkovError;

/// Every ordered `P`-tuple of grid points, sorted best first.
///
/// States compare by their descending-sorted reward lists, lexicographically.
/// Within an equal-reward class, tuples whose rows are already sorted by
/// reward come first, then ascending raw index.
#[derive(Clone, Debug)]
pub struct StateSpace {
    table: GridRewardTable,
    rows: usize,
    order: Vec<usize>,
    rank: Vec<usize>,
    optimal_count: usize,
    best: Vec<f64>,
}

fn cmp_desc_lists(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl StateSpace {
    pub fn from_table(table: GridRewardTable, rows: usize, cap: usize) -> Result<Self, MarkovError> {
        let grid = &table.grid;
        let n = grid
            .state_count(rows)
            .filter(|&n| n <= cap)
            .ok_or_else(|| MarkovError::Capacity {
                count: (grid.point_count().unwrap_or(usize::MAX) as u128).saturating_pow(rows as u32),
                cap,
            })?;
        let mut keys: Vec<(Vec<f64>, bool)> = Vec::with_capacity(n);
        for s in 0..n {
            let r: Vec<f64> = grid.state_rows(s, rows).into_iter().map(|p| table.values[p]).collect();
            let normal = r.windows(2).all(|w| w[0] >= w[1]);
            let mut sorted = r;
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
            keys.push((sorted, normal));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            cmp_desc_lists(&keys[a].0, &keys[b].0)
                .then(keys[b].1.cmp(&keys[a].1))
                .then(a.cmp(&b))
        });
        let mut rank = vec![0; n];
        for (i, &s) in order.iter().enumerate() {
            rank[s] = i;
        }
        let best: Vec<f64> = order.iter().map(|&s| keys[s].0[0]).collect();
        let optimal_count = best.iter().take_while(|&&b| b == table.max).count();
        Ok(Self {
            table,
            rows,
            order,
            rank,
            optimal_count,
            best,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn grid(&self) -> &Grid {
        &self.table.grid
    }

    pub fn table(&self) -> &GridRewardTable {
        &self.table
    }

    /// Raw grid-state index of the state at `rank`.
    pub fn raw_of(&self, rank: usize) -> usize {
        self.order[rank]
    }

    pub fn rank_of(&self, raw: usize) -> usize {
        self.rank[raw]
    }

    /// Size of the optimal set; optimal states are ranks `0..optimal_count`.
    pub fn optimal_count(&self) -> usize {
        self.optimal_count
    }

    pub fn is_optimal(&self, rank: usize) -> bool {
        rank < self.optimal_count
    }

    /// Largest reward among the rows of the state at `rank`.
    pub fn best_reward(&self, rank: usize) -> f64 {
        self.best[rank]
    }

    pub fn optimum(&self) -> f64 {
        self.table.max
    }

    pub fn points(&self, rank: usize) -> Vec<usize> {
        self.grid().state_rows(self.order[rank], self.rows)
    }

    pub fn point_rewards(&self, rank: usize) -> Vec<f64> {
        self.points(rank).into_iter().map(|p| self.table.values[p]).collect()
    }

    pub fn decode(&self, rank: usize) -> Population {
        let mut pop = self.grid().decode_state(self.order[rank], self.rows);
        pop.set_rewards(self.point_rewards(rank)).expect("row count matches");
        pop
    }

    pub fn rank_of_population(&self, pop: &Population) -> Result<usize, MarkovError> {
        if pop.len() != self.rows {
            return Err(MarkovError::Shape(format!(
                "{} rows, space uses {}",
                pop.len(),
                self.rows
            )));
        }
        Ok(self.rank[self.grid().encode_population(pop)?])
    }

    /// Whether every grid point has its own reward value; the elitist
    /// matrices are exactly triangular under this order when it holds.
    pub fn has_distinct_rewards(&self) -> bool {
        let mut v = self.table.values.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        v.windows(2).all(|w| w[0] != w[1])
    }
}

/// Evaluates `reward` on the grid and orders all populations of `rows` points.
pub fn enumerate_and_order<R: RewardModel + ?Sized>(
    grid: &Grid,
    rows: usize,
    reward: &R,
    cap: usize,
) -> Result<StateSpace, MarkovError> {
    let table = grid_reward_table(reward, grid, cap)?;
    StateSpace::from_table(table, rows, cap)
}
