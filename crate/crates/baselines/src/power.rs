//! Scalar power-control problems shared by WMMSE and Dinkelbach.

use llmo_wireless::{BcModel, IfcModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerConstraint {
    /// `0 ≤ x_d ≤ 1` for every link.
    PerLink,
    /// Additionally `Σ x_d ≤ 1`.
    SumPower,
}

/// Rates `f_d = ln(1 + P g_dd x_d / (1 + P Σ_{j≠d} g_jd x_j))`, where
/// `g_jd` is the power gain from transmitter `j` to receiver `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerControlProblem {
    pub links: usize,
    pub gains: Vec<f64>,
    pub p_tx: f64,
    pub constraint: PowerConstraint,
}

impl From<&IfcModel> for PowerControlProblem {
    fn from(m: &IfcModel) -> Self {
        let d = m.links();
        let gains = (0..d * d).map(|i| m.gain(i / d, i % d)).collect();
        Self {
            links: d,
            gains,
            p_tx: m.p_tx,
            constraint: PowerConstraint::PerLink,
        }
    }
}

/// Each broadcast user sees every other user's power through its own channel.
impl From<&BcModel> for PowerControlProblem {
    fn from(m: &BcModel) -> Self {
        let d = m.users();
        let gains = (0..d * d).map(|i| m.gain(i % d)).collect();
        Self {
            links: d,
            gains,
            p_tx: m.p_tx,
            constraint: PowerConstraint::SumPower,
        }
    }
}

impl PowerControlProblem {
    pub fn gain(&self, tx: usize, rx: usize) -> f64 {
        self.gains[tx * self.links + rx]
    }

    /// `1 + P Σ_j g_jd x_j`, own signal included.
    pub fn received(&self, x: &[f64], d: usize) -> f64 {
        1.0 + self.p_tx * (0..self.links).map(|j| self.gain(j, d) * x[j]).sum::<f64>()
    }

    /// `1 + P Σ_{j≠d} g_jd x_j`.
    pub fn interference(&self, x: &[f64], d: usize) -> f64 {
        self.received(x, d) - self.p_tx * self.gain(d, d) * x[d]
    }

    pub fn rates(&self, x: &[f64]) -> Vec<f64> {
        (0..self.links)
            .map(|d| (self.p_tx * self.gain(d, d) * x[d] / self.interference(x, d)).ln_1p())
            .collect()
    }

    pub fn sum_rate(&self, x: &[f64]) -> f64 {
        self.rates(x).iter().sum()
    }
}
