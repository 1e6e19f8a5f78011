use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Dims4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

/// AP antenna arrangement; elements sit on a half-wavelength grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApArray {
    Linear,
    Rectangular { rows: usize, cols: usize },
}

/// Deployment and radio setup of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario_id: u32,
    pub name: String,
    pub n_ap: usize,
    pub n_ap_ant: usize,
    pub n_ue_ant: usize,
    pub n_subc: usize,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub area: Area,
    pub ap_positions: Vec<[f64; 2]>,
    pub ap_array: ApArray,
    pub traj_spacing_m: f64,
    pub n_scatterers: usize,
    /// Largest timestamp gap (in samples) that still counts as "close".
    pub close_window: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn dims(&self) -> Dims4 {
        [self.n_ap, self.n_ap_ant, self.n_ue_ant, self.n_subc]
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.scenario_id;
        let bad = |msg: String| Err(Error::Config(format!("scenario {id}: {msg}")));
        if self.n_ap == 0 || self.n_ap_ant == 0 || self.n_ue_ant == 0 || self.n_subc == 0 {
            return bad(format!("antenna/subcarrier counts must be positive, got {:?}", self.dims()));
        }
        if self.ap_positions.len() != self.n_ap {
            return bad(format!("{} AP positions for {} APs", self.ap_positions.len(), self.n_ap));
        }
        if let ApArray::Rectangular { rows, cols } = self.ap_array {
            if rows * cols != self.n_ap_ant {
                return bad(format!("{rows}x{cols} array does not hold {} antennas", self.n_ap_ant));
            }
        }
        if !(self.bandwidth_hz > 0.0 && self.carrier_freq_hz > self.bandwidth_hz) {
            return bad("need carrier frequency > bandwidth > 0".into());
        }
        if !(self.area.width_m > 0.0 && self.area.height_m > 0.0) {
            return bad("area must be nondegenerate".into());
        }
        if !(self.traj_spacing_m > 0.0) {
            return bad("trajectory spacing must be positive".into());
        }
        if !(self.close_window > 0.0) {
            return bad("close window must be positive".into());
        }
        if self.ap_positions.iter().flatten().any(|c| !c.is_finite()) {
            return bad("AP positions must be finite".into());
        }
        Ok(())
    }

    /// Six 4-antenna linear-array APs around a 40 m x 60 m outdoor area.
    pub fn outdoor_like(seed: u64) -> Self {
        Self {
            scenario_id: 1,
            name: "outdoor-like".into(),
            n_ap: 6,
            n_ap_ant: 4,
            n_ue_ant: 1,
            n_subc: 300,
            carrier_freq_hz: 1.9e9,
            bandwidth_hz: 20e6,
            area: Area { width_m: 40.0, height_m: 60.0 },
            ap_positions: vec![
                [-3.0, 4.0],
                [-3.0, 31.0],
                [-3.0, 57.0],
                [43.0, 9.0],
                [43.0, 36.0],
                [20.5, 63.0],
            ],
            ap_array: ApArray::Linear,
            traj_spacing_m: 2.0,
            n_scatterers: 8,
            close_window: 10.0,
            seed: seed ^ 0x0001,
        }
    }

    /// Eight 4-antenna linear-array APs around a 6 m x 8 m office.
    pub fn indoor_like(seed: u64) -> Self {
        Self {
            scenario_id: 2,
            name: "indoor-like".into(),
            n_ap: 8,
            n_ap_ant: 4,
            n_ue_ant: 1,
            n_subc: 64,
            carrier_freq_hz: 2.4e9,
            bandwidth_hz: 20e6,
            area: Area { width_m: 6.0, height_m: 8.0 },
            ap_positions: vec![
                [-0.55, -0.45],
                [3.05, -0.6],
                [6.5, -0.5],
                [6.6, 4.05],
                [6.45, 8.55],
                [2.95, 8.6],
                [-0.5, 8.5],
                [-0.6, 3.95],
            ],
            ap_array: ApArray::Linear,
            traj_spacing_m: 0.1,
            n_scatterers: 8,
            close_window: 1.0,
            seed: seed ^ 0x0002,
        }
    }

    /// Four APs with 2x4 rectangular arrays at the corners of a 16 m x 20 m hall.
    pub fn factory_like(seed: u64) -> Self {
        Self {
            scenario_id: 3,
            name: "factory-like".into(),
            n_ap: 4,
            n_ap_ant: 8,
            n_ue_ant: 1,
            n_subc: 256,
            carrier_freq_hz: 1.272e9,
            bandwidth_hz: 50e6,
            area: Area { width_m: 16.0, height_m: 20.0 },
            ap_positions: vec![[-1.2, -0.8], [17.1, -1.1], [16.9, 21.2], [-0.9, 20.9]],
            ap_array: ApArray::Rectangular { rows: 2, cols: 4 },
            traj_spacing_m: 0.5,
            n_scatterers: 8,
            close_window: 1.0,
            seed: seed ^ 0x0003,
        }
    }
}

/// The three default scenarios (outdoor-, indoor- and factory-like).
pub fn default_suite(seed: u64) -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec::outdoor_like(seed),
        ScenarioSpec::indoor_like(seed),
        ScenarioSpec::factory_like(seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for s in default_suite(1) {
            s.validate().unwrap();
        }
    }

    #[test]
    fn validation_catches_inconsistency() {
        let mut s = ScenarioSpec::factory_like(0);
        s.ap_array = ApArray::Rectangular { rows: 3, cols: 4 };
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::outdoor_like(0);
        s.carrier_freq_hz = 1e6;
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::outdoor_like(0);
        s.ap_positions.pop();
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = ScenarioSpec::factory_like(9);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&j).unwrap(), s);
    }
}
