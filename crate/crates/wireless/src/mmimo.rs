//! Cell-average energy efficiency of a single-cell massive-MIMO downlink
//! with MRT precoding, equal power split and imperfect channel estimates.
//!
//! The action is `x = [M, K, p_dl]` with `p_dl` in dBm. Channels are
//! `h_k = √β g_k` with `g_k ~ CN(0, I_M)`; estimates are
//! `ĥ_k = ρ √β (g_k + e_k)` with `ρ = Kp_ulβ/(Kp_ulβ + σ²)` and
//! `e_k ~ CN(0, σ²/(Kp_ulβ) I_M)`.

use llmo_core::optimizer::seeded_stream;
use llmo_core::{RewardError, RewardModel};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::complex_normal;
use crate::units::{db_to_linear, dbm_to_watts};
use crate::WirelessError;

/// `g(x) = P₀ + c_M M + c_K K + c_p p_dl[W] + c_r Σ_k f_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub static_w: f64,
    pub per_antenna_w: f64,
    pub per_user_w: f64,
    pub per_tx_watt: f64,
    pub per_rate_w: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            static_w: 18.0,
            per_antenna_w: 1.0,
            per_user_w: 0.1,
            per_tx_watt: 1.0 / 0.39,
            per_rate_w: 1.15,
        }
    }
}

impl PowerModel {
    pub fn consumption(&self, antennas: usize, users: usize, p_dl_w: f64, sum_rate: f64) -> f64 {
        self.static_w
            + self.per_antenna_w * antennas as f64
            + self.per_user_w * users as f64
            + self.per_tx_watt * p_dl_w
            + self.per_rate_w * sum_rate
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmimoModel {
    /// Symbols per coherence block `C`.
    pub coherence: usize,
    pub noise_dbm: f64,
    pub pilot_dbm: f64,
    /// Large-scale gain `β` in dB, shared by all users.
    pub path_loss_db: f64,
    pub max_antennas: usize,
    pub max_users: usize,
    pub min_power_dbm: f64,
    pub max_power_dbm: f64,
    pub power: PowerModel,
    /// Channel draws averaged per evaluation.
    pub samples: usize,
}

impl Default for MmimoModel {
    fn default() -> Self {
        Self {
            coherence: 1800,
            noise_dbm: -96.0,
            pilot_dbm: 23.0,
            path_loss_db: -120.0,
            max_antennas: 256,
            max_users: 256,
            min_power_dbm: 0.0,
            max_power_dbm: 50.0,
            power: PowerModel::default(),
            samples: 20,
        }
    }
}

impl MmimoModel {
    pub fn validate(&self) -> Result<(), WirelessError> {
        let bad = |m: &str| Err(WirelessError::InvalidModel(m.into()));
        if self.coherence == 0 {
            return bad("coherence block must hold at least one symbol");
        }
        if self.samples == 0 {
            return bad("need at least one channel sample");
        }
        if self.max_antennas == 0 || self.max_users == 0 {
            return bad("antenna and user limits must be at least 1");
        }
        if ![
            self.noise_dbm,
            self.pilot_dbm,
            self.path_loss_db,
            self.min_power_dbm,
            self.max_power_dbm,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return bad("powers must be finite");
        }
        if self.min_power_dbm > self.max_power_dbm {
            return bad("min_power_dbm exceeds max_power_dbm");
        }
        let p = &self.power;
        if [p.static_w, p.per_antenna_w, p.per_user_w, p.per_tx_watt, p.per_rate_w]
            .iter()
            .any(|c| !c.is_finite() || *c < 0.0)
            || p.static_w <= 0.0
        {
            return bad("power-model coefficients must be non-negative with a positive static term");
        }
        Ok(())
    }

    /// Box bounds of `[M, K, p_dl]`.
    pub fn bounds(&self) -> llmo_core::Bounds {
        llmo_core::Bounds::new(
            vec![1.0, 1.0, self.min_power_dbm],
            vec![self.max_antennas as f64, self.max_users as f64, self.max_power_dbm],
        )
        .expect("validated model has ordered bounds")
    }

    /// Pilot SNR `K p_ul β / σ²`.
    fn pilot_snr(&self, users: usize) -> f64 {
        users as f64 * dbm_to_watts(self.pilot_dbm) * db_to_linear(self.path_loss_db) / dbm_to_watts(self.noise_dbm)
    }

    /// LMMSE shrinkage `ρ`.
    pub fn estimate_gain(&self, users: usize) -> f64 {
        let snr = self.pilot_snr(users);
        snr / (1.0 + snr)
    }
}

fn integer_coordinate(v: f64, name: &str) -> Result<usize, WirelessError> {
    if !v.is_finite() || v.fract() != 0.0 || v < 1.0 {
        return Err(WirelessError::Bounds(format!(
            "{name} = {v} must be a positive integer"
        )));
    }
    Ok(v as usize)
}

/// Rates `f_k` for one channel draw.
fn sample_rates(model: &MmimoModel, antennas: usize, users: usize, p_dl_w: f64, seed: u64, sample: usize) -> Vec<f64> {
    let mut rng = seeded_stream(seed, sample as u64);
    let err_std = (1.0 / model.pilot_snr(users)).sqrt();
    let mut g = Vec::with_capacity(users * antennas);
    let mut v = Vec::with_capacity(users * antennas);
    for _ in 0..users * antennas {
        let gi = complex_normal(&mut rng);
        let ei = complex_normal(&mut rng) * err_std;
        g.push(gi);
        v.push(gi + ei);
    }
    let beta = db_to_linear(model.path_loss_db);
    let noise = dbm_to_watts(model.noise_dbm);
    let per_user = p_dl_w / users as f64;
    let prefactor = 1.0 - users as f64 / model.coherence as f64;
    let norms: Vec<f64> = v
        .chunks(antennas)
        .map(|vj| vj.iter().map(Complex64::norm_sqr).sum())
        .collect();
    (0..users)
        .map(|k| {
            let gk = &g[k * antennas..(k + 1) * antennas];
            let mut signal = 0.0;
            let mut interference = 0.0;
            for j in 0..users {
                let vj = &v[j * antennas..(j + 1) * antennas];
                let inner: Complex64 = gk.iter().zip(vj).map(|(a, b)| a.conj() * b).sum();
                let a = beta * inner.norm_sqr() / norms[j];
                if j == k {
                    signal = a;
                } else {
                    interference += a;
                }
            }
            prefactor * (per_user * signal / (noise + per_user * interference)).ln_1p()
        })
        .collect()
}

/// Per-draw EE values `Σ_k f_k / g(x)`; their mean is [`mmimo_ee`].
pub fn mmimo_ee_samples(x: &[f64], model: &MmimoModel, seed: u64) -> Result<Vec<f64>, WirelessError> {
    model.validate()?;
    if x.len() != 3 {
        return Err(WirelessError::Bounds(format!(
            "expected [M, K, p_dl], got {} values",
            x.len()
        )));
    }
    let antennas = integer_coordinate(x[0], "M")?;
    let users = integer_coordinate(x[1], "K")?;
    if users > model.coherence {
        return Err(WirelessError::Model(format!(
            "K = {users} exceeds the coherence block C = {}",
            model.coherence
        )));
    }
    if antennas > model.max_antennas || users > model.max_users {
        return Err(WirelessError::Bounds(format!(
            "M = {antennas}, K = {users} exceed limits {}, {}",
            model.max_antennas, model.max_users
        )));
    }
    if users > antennas {
        return Err(WirelessError::Model(format!("K = {users} exceeds M = {antennas}")));
    }
    let p_dbm = x[2];
    if !(p_dbm >= model.min_power_dbm && p_dbm <= model.max_power_dbm) {
        return Err(WirelessError::Bounds(format!(
            "p_dl = {p_dbm} dBm outside [{}, {}]",
            model.min_power_dbm, model.max_power_dbm
        )));
    }
    let p_w = dbm_to_watts(p_dbm);
    Ok((0..model.samples)
        .map(|s| {
            let rate: f64 = sample_rates(model, antennas, users, p_w, seed, s).iter().sum();
            rate / model.power.consumption(antennas, users, p_w, rate)
        })
        .collect())
}

/// Monte-Carlo cell-average EE; a pure function of `(x, model, seed)`.
pub fn mmimo_ee(x: &[f64], model: &MmimoModel, seed: u64) -> Result<f64, WirelessError> {
    let s = mmimo_ee_samples(x, model, seed)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Reward wrapper with a fixed channel seed. Non-integer `M`, `K` are rounded;
/// `K > M` scores zero and reports `K − M` as its violation.
#[derive(Clone, Debug)]
pub struct MmimoReward {
    pub model: MmimoModel,
    pub seed: u64,
}

impl MmimoReward {
    fn snap(x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for v in y.iter_mut().take(2) {
            *v = v.round();
        }
        y
    }
}

impl RewardModel for MmimoReward {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        let y = Self::snap(x);
        if y.len() == 3 && y[1] > y[0] {
            return Ok(0.0);
        }
        mmimo_ee(&y, &self.model, self.seed).map_err(RewardError::from)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let y = Self::snap(x);
        if y.len() == 3 {
            (y[1] - y[0]).max(0.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmimoOptimum {
    pub antennas: usize,
    pub users: usize,
    pub power_dbm: f64,
    pub ee: f64,
}

/// Exhaustive search over the product grid, skipping `K > M`.
/// Ties keep the first point in `(M, K, p)` order.
pub fn mmimo_grid_search(
    model: &MmimoModel,
    antennas: &[usize],
    users: &[usize],
    powers_dbm: &[f64],
    seed: u64,
) -> Result<MmimoOptimum, WirelessError> {
    let points: Vec<(usize, usize, f64)> = antennas
        .iter()
        .flat_map(|&m| users.iter().filter(move |&&k| k <= m).map(move |&k| (m, k)))
        .flat_map(|(m, k)| powers_dbm.iter().map(move |&p| (m, k, p)))
        .collect();
    if points.is_empty() {
        return Err(WirelessError::InvalidModel("empty search grid".into()));
    }
    let values = points
        .par_iter()
        .map(|&(m, k, p)| mmimo_ee(&[m as f64, k as f64, p], model, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let (antennas, users, power_dbm) = points[best];
    Ok(MmimoOptimum {
        antennas,
        users,
        power_dbm,
        ee: values[best],
    })
}
