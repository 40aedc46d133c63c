//! Channel draws and search results shipped with the crate.

use crate::channel::{ChannelFixture, ChannelMatrix};
use crate::WirelessError;

/// 2-link interference channel, `rayleigh_channels(2, 2, IFC_D2_SEED)`.
pub const IFC_D2_CSV: &str = include_str!("../fixtures/ifc_d2.csv");
pub const IFC_D2_SEED: u64 = 2024;

/// Exhaustive-search optimum of the default massive-MIMO model with
/// two channel draws over [`MMIMO_GRID_ANTENNAS`] × [`MMIMO_GRID_USERS`] × [`MMIMO_GRID_POWERS_DBM`].
pub const MMIMO_OPTIMUM_CSV: &str = include_str!("../fixtures/mmimo_optimum.csv");
pub const MMIMO_GRID_ANTENNAS: [usize; 5] = [16, 32, 64, 128, 256];
pub const MMIMO_GRID_USERS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];
pub const MMIMO_GRID_POWERS_DBM: [f64; 6] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0];

pub fn ifc_d2() -> Result<ChannelMatrix, WirelessError> {
    let mut f = ChannelFixture::read_csv(IFC_D2_CSV.as_bytes())?;
    if f.len() != 1 {
        return Err(WirelessError::Fixture(format!(
            "expected one sample, found {}",
            f.len()
        )));
    }
    Ok(f.channels.remove(0))
}

#[derive(Clone, Debug, PartialEq, serde::Deserialize)]
pub struct MmimoOptimumRecord {
    pub seed: u64,
    pub samples: usize,
    pub antennas: usize,
    pub users: usize,
    pub power_dbm: f64,
    pub ee: f64,
}

pub fn mmimo_optimum() -> Result<MmimoOptimumRecord, WirelessError> {
    let mut r = csv::Reader::from_reader(MMIMO_OPTIMUM_CSV.as_bytes());
    r.deserialize()
        .next()
        .ok_or_else(|| WirelessError::Fixture("empty optimum fixture".into()))?
        .map_err(WirelessError::from)
}
