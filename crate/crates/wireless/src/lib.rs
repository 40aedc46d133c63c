//! Wireless reward models: interference channel (IFC) spectral and energy
//! efficiency, broadcast channel (BC) sum rate under a sum-power
//! constraint, and a massive-MIMO cell-average EE on synthetic channels.
//!
//! All rates are in nats (natural logarithm).

mod bc;
mod channel;
pub mod fixtures;
mod ifc;
mod mmimo;
mod units;

use llmo_core::RewardError;
use thiserror::Error;

pub use bc::{bc_penalized, bc_se, sum_power_violation, BcModel, BcReward, ConstraintMode, DEFAULT_PENALTY};
pub use channel::{complex_normal, rayleigh_channels, rayleigh_vector, ChannelFixture, ChannelMatrix};
pub use ifc::{ifc_ee, ifc_se, IfcModel, IfcObjective, IfcReward, DEFAULT_P_FIX, DEFAULT_P_TX};
pub use llmo_core::grid::{grid_reward_table, GridRewardTable};
pub use mmimo::{mmimo_ee, mmimo_ee_samples, mmimo_grid_search, MmimoModel, MmimoOptimum, MmimoReward, PowerModel};
pub use units::{db_to_linear, dbm_to_watts, watts_to_dbm};

#[derive(Debug, Error)]
pub enum WirelessError {
    #[error("action out of bounds: {0}")]
    Bounds(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<WirelessError> for RewardError {
    fn from(e: WirelessError) -> Self {
        match e {
            WirelessError::Bounds(m) => RewardError::Bounds(m),
            other => RewardError::Model(other.to_string()),
        }
    }
}

/// `x` has `dim` finite entries in `[0, 1]`.
pub(crate) fn check_unit_box(x: &[f64], dim: usize) -> Result<(), WirelessError> {
    if x.len() != dim {
        return Err(WirelessError::Bounds(format!("expected {dim} values, got {}", x.len())));
    }
    for (d, v) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(v) {
            return Err(WirelessError::Bounds(format!("x[{d}] = {v} is outside [0, 1]")));
        }
    }
    Ok(())
}
