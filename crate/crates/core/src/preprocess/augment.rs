use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pad::PaddedCsi;
use crate::error::{Error, Result};

/// Augmentation settings shared by all scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub enable: bool,
    /// Fraction of real subcarriers removed per sample.
    pub q: f64,
    /// Range for the strongest AP's SNR, in dB.
    pub snr_db_range: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { enable: true, q: 0.2, snr_db_range: (10.0, 21.0), seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.q) {
            return Err(Error::Config(format!("q = {} outside [0, 1)", self.q)));
        }
        let (lo, hi) = self.snr_db_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad SNR range ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Zeros a random subset of receive antennas per AP (keeping at least
/// one each) and of UE antennas (keeping at least one).
pub fn deactivate_antennas<R: Rng + ?Sized>(mut p: PaddedCsi, rng: &mut R) -> PaddedCsi {
    let [n_ap, n_ap_ant, n_ue_ant, _] = p.source_dims();
    for a in 0..n_ap {
        let k = rng.random_range(0..n_ap_ant);
        for b in sample(rng, n_ap_ant, k) {
            for u in 0..n_ue_ant {
                p.zero_lane(a, b, u);
            }
        }
    }
    let k_ue = rng.random_range(0..n_ue_ant);
    for u in sample(rng, n_ue_ant, k_ue) {
        for a in 0..n_ap {
            for b in 0..n_ap_ant {
                p.zero_lane(a, b, u);
            }
        }
    }
    p
}

/// Zeros `⌊q·W_s⌋` contiguous real subcarriers starting at a uniform
/// index, wrapping around the end of the real band.
pub fn remove_subcarrier_band<R: Rng + ?Sized>(mut p: PaddedCsi, q: f64, rng: &mut R) -> PaddedCsi {
    let w_s = p.source_dims()[3];
    let count = ((q * w_s as f64) + 1e-9).floor() as usize;
    let start = rng.random_range(0..w_s);
    if count == 0 {
        return p;
    }
    let removed: Vec<usize> = (0..count).map(|k| (start + k) % w_s).collect();
    for &w in &removed {
        p.subc_live[w] = false;
    }
    let [na, nb, nu, _] = p.tensor.dims();
    for a in 0..na {
        for b in 0..nb {
            for u in 0..nu {
                let lane = p.tensor.lane_mut(a, b, u);
                for &w in &removed {
                    lane[w] = Complex64::default();
                }
            }
        }
    }
    p
}

/// Adds circularly-symmetric complex Gaussian noise to live entries.
///
/// The target SNR `ρ` is drawn uniformly from `snr_db_range`; the noise
/// variance is `max_a P_a / 10^(ρ/10)` where `P_a` is the mean power over
/// AP `a`'s live entries, so the strongest AP sees SNR `ρ`.
pub fn add_noise<R: Rng + ?Sized>(
    mut p: PaddedCsi,
    snr_db_range: (f64, f64),
    rng: &mut R,
) -> Result<PaddedCsi> {
    let (lo, hi) = snr_db_range;
    let rho = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let n_ap = p.tensor.dims()[0];
    let mut power = vec![(0.0f64, 0usize); n_ap];
    let live_w: Vec<usize> = (0..p.subc_live.len()).filter(|&w| p.subc_live[w]).collect();
    let lanes: Vec<_> = p.live_lanes().collect();
    for &(a, b, u) in &lanes {
        let lane = p.tensor.lane(a, b, u);
        let acc = &mut power[a];
        for &w in &live_w {
            acc.0 += lane[w].norm_sqr();
        }
        acc.1 += live_w.len();
    }
    let strongest = power
        .iter()
        .filter(|(_, n)| *n > 0)
        .map(|(s, n)| s / *n as f64)
        .fold(0.0f64, f64::max);
    if !(strongest > 0.0) {
        return Err(Error::Data("cannot add noise to an all-zero tensor".into()));
    }
    let n0 = strongest / 10f64.powf(rho / 10.0);
    let sigma = (n0 / 2.0).sqrt();
    for &(a, b, u) in &lanes {
        let lane = p.tensor.lane_mut(a, b, u);
        for &w in &live_w {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            lane[w] += Complex64::new(re * sigma, im * sigma);
        }
    }
    Ok(p)
}

/// Applies the three augmentations in order when `cfg.enable` is set.
pub fn augment<R: Rng + ?Sized>(p: PaddedCsi, cfg: &AugmentConfig, rng: &mut R) -> Result<PaddedCsi> {
    if !cfg.enable {
        return Ok(p);
    }
    let p = deactivate_antennas(p, rng);
    let p = remove_subcarrier_band(p, cfg.q, rng);
    add_noise(p, cfg.snr_db_range, rng)
}
