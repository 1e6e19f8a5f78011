use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::spec::{ApArray, ScenarioSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::Tensor;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Power ratio between consecutive reflected paths.
pub const PATH_POWER_DECAY: f64 = 0.6;

/// Geometric multipath channel for one scenario: a line-of-sight path plus
/// one reflected path per fixed scatterer.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    spec: ScenarioSpec,
    scatterers: Vec<[f64; 2]>,
    ap_offsets: Vec<[f64; 2]>,
    ue_offsets: Vec<[f64; 2]>,
    wavenumber: f64,
    /// Baseband-to-RF subcarrier frequencies.
    freqs: Vec<f64>,
}

impl ChannelModel {
    /// Draws the scatterer layout from the scenario seed.
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let mut r = rng::stream(&[spec.seed, rng::tag::SCATTERERS]);
        let (w, h) = (spec.area.width_m, spec.area.height_m);
        let scatterers = (0..spec.n_scatterers)
            .map(|_| {
                [r.random_range(-0.2 * w..1.2 * w), r.random_range(-0.2 * h..1.2 * h)]
            })
            .collect();
        let lambda = SPEED_OF_LIGHT / spec.carrier_freq_hz;
        let half = lambda / 2.0;
        let ap_offsets = match spec.ap_array {
            ApArray::Linear => (0..spec.n_ap_ant).map(|b| [b as f64 * half, 0.0]).collect(),
            ApArray::Rectangular { rows, cols } => (0..rows)
                .flat_map(|r| (0..cols).map(move |c| [c as f64 * half, r as f64 * half]))
                .collect(),
        };
        let ue_offsets = (0..spec.n_ue_ant).map(|u| [u as f64 * half, 0.0]).collect();
        let n = spec.n_subc;
        let df = spec.bandwidth_hz / n as f64;
        let freqs = (0..n)
            .map(|k| spec.carrier_freq_hz + (k as f64 - (n as f64 - 1.0) / 2.0) * df)
            .collect();
        Ok(Self {
            spec: spec.clone(),
            scatterers,
            ap_offsets,
            ue_offsets,
            wavenumber: std::f64::consts::TAU / lambda,
            freqs,
        })
    }

    pub fn scatterers(&self) -> &[[f64; 2]] {
        &self.scatterers
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.spec.bandwidth_hz / self.spec.n_subc as f64
    }

    /// CSI tensor at `ue`. Reflected-path gains are drawn from `rng`.
    pub fn synthesize<R: Rng + ?Sized>(&self, ue: [f64; 2], rng: &mut R) -> Result<Tensor> {
        let s = &self.spec;
        let mut out = Tensor::zeros(s.dims());
        for (a, &ap) in s.ap_positions.iter().enumerate() {
            let los = dist(ue, ap);
            if los < 1e-9 {
                return Err(Error::Data(format!("UE at {ue:?} coincides with AP {a}")));
            }
            let mut paths = Vec::with_capacity(1 + self.scatterers.len());
            paths.push(Path {
                length: los,
                gain: Complex64::new(1.0 / los, 0.0),
                arrival: unit(ue, ap),
                departure: unit(ap, ue),
            });
            for (p, &sc) in self.scatterers.iter().enumerate() {
                let length = dist(ue, sc) + dist(sc, ap);
                let power = PATH_POWER_DECAY.powi(p as i32 + 1);
                let g = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                    * (power / 2.0).sqrt();
                paths.push(Path {
                    length,
                    gain: g / length,
                    arrival: unit(sc, ap),
                    departure: unit(sc, ue),
                });
            }
            for path in &paths {
                let response = self.delay_response(path.length / SPEED_OF_LIGHT);
                for (b, off_b) in self.ap_offsets.iter().enumerate() {
                    let ap_phase = path.arrival.map_or(0.0, |k| self.wavenumber * dot(*off_b, k));
                    for (u, off_u) in self.ue_offsets.iter().enumerate() {
                        let ue_phase = path.departure.map_or(0.0, |k| self.wavenumber * dot(*off_u, k));
                        let coef = path.gain * Complex64::from_polar(1.0, ap_phase + ue_phase);
                        for (h, r) in out.lane_mut(a, b, u).iter_mut().zip(&response) {
                            *h += coef * r;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `e^{-j2π f_w τ}` over all subcarriers, by phasor recurrence.
    fn delay_response(&self, tau: f64) -> Vec<Complex64> {
        let start = Complex64::from_polar(1.0, -std::f64::consts::TAU * self.freqs[0] * tau);
        let step = Complex64::from_polar(1.0, -std::f64::consts::TAU * self.subcarrier_spacing() * tau);
        let mut cur = start;
        let mut out = Vec::with_capacity(self.freqs.len());
        for _ in 0..self.freqs.len() {
            out.push(cur);
            cur *= step;
        }
        out
    }
}

struct Path {
    length: f64,
    gain: Complex64,
    /// Unit vector from the AP toward the path's last bounce.
    arrival: Option<[f64; 2]>,
    /// Unit vector from the UE toward the path's first bounce.
    departure: Option<[f64; 2]>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Unit vector pointing from `to` toward `from`; `None` when they coincide.
fn unit(from: [f64; 2], to: [f64; 2]) -> Option<[f64; 2]> {
    let d = dist(from, to);
    (d > 1e-12).then(|| [(from[0] - to[0]) / d, (from[1] - to[1]) / d])
}

/// Builds the scenario's channel model and synthesizes one tensor.
pub fn synth_csi<R: Rng + ?Sized>(spec: &ScenarioSpec, ue: [f64; 2], rng: &mut R) -> Result<Tensor> {
    ChannelModel::new(spec)?.synthesize(ue, rng)
}
