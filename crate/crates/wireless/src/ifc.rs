//! D-link interference channel with per-link power ratios `x_d ∈ [0, 1]`.
//!
//! Rates are in nats: every logarithm in this crate is natural.

use llmo_core::{RewardError, RewardModel};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::{check_unit_box, WirelessError};

pub const DEFAULT_P_TX: f64 = 10.0;
pub const DEFAULT_P_FIX: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfcModel {
    links: usize,
    /// `|h_{tx,rx}|²`, row-major with the transmitter as row.
    gains: Vec<f64>,
    pub p_tx: f64,
    pub p_fix: f64,
}

impl IfcModel {
    pub fn new(channel: &ChannelMatrix, p_tx: f64, p_fix: f64) -> Result<Self, WirelessError> {
        if channel.rows() != channel.cols() {
            return Err(WirelessError::InvalidModel(format!(
                "interference channel must be square, got {}x{}",
                channel.rows(),
                channel.cols()
            )));
        }
        Self::from_gains(channel.rows(), channel.power_gains(), p_tx, p_fix)
    }

    pub fn from_gains(links: usize, gains: Vec<f64>, p_tx: f64, p_fix: f64) -> Result<Self, WirelessError> {
        if links == 0 || gains.len() != links * links {
            return Err(WirelessError::InvalidModel(format!(
                "{} gains for {links} links",
                gains.len()
            )));
        }
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(WirelessError::InvalidModel(
                "gains must be finite and non-negative".into(),
            ));
        }
        if !(p_tx > 0.0 && p_tx.is_finite()) || !(p_fix > 0.0 && p_fix.is_finite()) {
            return Err(WirelessError::InvalidModel("P_tx and P_fix must be positive".into()));
        }
        Ok(Self {
            links,
            gains,
            p_tx,
            p_fix,
        })
    }

    /// Standard powers `P_tx = 10 W`, `P_fix = 1 W`.
    pub fn standard(channel: &ChannelMatrix) -> Result<Self, WirelessError> {
        Self::new(channel, DEFAULT_P_TX, DEFAULT_P_FIX)
    }

    pub fn links(&self) -> usize {
        self.links
    }

    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        self.gains[tx * self.links + rx]
    }

    /// Noise plus interference seen at receiver `d`, in units of the noise power.
    pub fn interference(&self, x: &[f64], d: usize) -> f64 {
        1.0 + self.p_tx
            * (0..self.links)
                .filter(|&j| j != d)
                .map(|j| self.gain(j, d) * x[j])
                .sum::<f64>()
    }

    /// Per-receiver rates `f_d(x)`; no bounds check.
    pub fn rates_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (0..self.links)
            .map(|d| (self.p_tx * self.gain(d, d) * x[d] / self.interference(x, d)).ln_1p())
            .collect()
    }

    pub fn rates(&self, x: &[f64]) -> Result<Vec<f64>, WirelessError> {
        check_unit_box(x, self.links)?;
        Ok(self.rates_unchecked(x))
    }

    pub fn se_unchecked(&self, x: &[f64]) -> f64 {
        self.rates_unchecked(x).iter().sum()
    }

    /// Sum over links of `f_d / (P_fix + P_tx x_d)`.
    pub fn ee_unchecked(&self, x: &[f64]) -> f64 {
        self.rates_unchecked(x)
            .iter()
            .zip(x)
            .map(|(f, xd)| f / (self.p_fix + self.p_tx * xd))
            .sum()
    }
}

pub fn ifc_se(x: &[f64], model: &IfcModel) -> Result<f64, WirelessError> {
    check_unit_box(x, model.links)?;
    Ok(model.se_unchecked(x))
}

pub fn ifc_ee(x: &[f64], model: &IfcModel) -> Result<f64, WirelessError> {
    check_unit_box(x, model.links)?;
    Ok(model.ee_unchecked(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IfcObjective {
    Se,
    Ee,
}

#[derive(Clone, Debug)]
pub struct IfcReward {
    pub model: IfcModel,
    pub objective: IfcObjective,
}

impl IfcReward {
    pub fn new(model: IfcModel, objective: IfcObjective) -> Self {
        Self { model, objective }
    }
}

impl RewardModel for IfcReward {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        let r = match self.objective {
            IfcObjective::Se => ifc_se(x, &self.model),
            IfcObjective::Ee => ifc_ee(x, &self.model),
        };
        r.map_err(RewardError::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single() -> IfcModel {
        IfcModel::from_gains(1, vec![1.0], 10.0, 1.0).unwrap()
    }

    #[test]
    fn zero_power_gives_zero() {
        let m = IfcModel::standard(&crate::rayleigh_channels(3, 3, 1).unwrap()).unwrap();
        assert_eq!(ifc_se(&[0.0; 3], &m).unwrap(), 0.0);
        assert_eq!(ifc_ee(&[0.0; 3], &m).unwrap(), 0.0);
    }

    #[test]
    fn single_link_full_power() {
        let m = single();
        let ln11 = 11f64.ln();
        assert_relative_eq!(ifc_se(&[1.0], &m).unwrap(), ln11, epsilon = 1e-15);
        assert_relative_eq!(ifc_se(&[1.0], &m).unwrap(), 2.397_895_272_798_371, epsilon = 1e-15);
        assert_relative_eq!(ifc_ee(&[1.0], &m).unwrap(), ln11 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(ifc_ee(&[1.0], &m).unwrap(), 0.217_990_479_345_306_5, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_links_decouple() {
        let m = IfcModel::standard(&ChannelMatrix::diagonal(&[1.0, 1.0]).unwrap()).unwrap();
        let se = ifc_se(&[1.0, 1.0], &m).unwrap();
        assert!((se - 2.0 * 11f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn cross_gain_direction() {
        // Transmitter 0 hurts receiver 1 only.
        let m = IfcModel::from_gains(2, vec![1.0, 2.0, 0.0, 1.0], 10.0, 1.0).unwrap();
        let f = m.rates(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(f[0], 11f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(f[1], (1.0 + 10.0 / 21.0f64).ln(), epsilon = 1e-15);
    }

    #[test]
    fn out_of_box_is_rejected() {
        let m = single();
        assert!(matches!(ifc_se(&[1.5], &m), Err(WirelessError::Bounds(_))));
        assert!(matches!(ifc_ee(&[-0.1], &m), Err(WirelessError::Bounds(_))));
        assert!(matches!(ifc_se(&[0.5, 0.5], &m), Err(WirelessError::Bounds(_))));
        let r = IfcReward::new(m, IfcObjective::Se);
        assert!(matches!(r.evaluate(&[2.0]), Err(RewardError::Bounds(_))));
    }

    #[test]
    fn invalid_models() {
        assert!(IfcModel::from_gains(1, vec![1.0], 0.0, 1.0).is_err());
        assert!(IfcModel::from_gains(1, vec![1.0], 1.0, -1.0).is_err());
        assert!(IfcModel::from_gains(2, vec![1.0], 1.0, 1.0).is_err());
        assert!(IfcModel::new(&crate::rayleigh_channels(2, 3, 0).unwrap(), 1.0, 1.0).is_err());
    }
}
