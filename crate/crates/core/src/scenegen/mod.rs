//! Synthetic scenarios: AP layouts, serpentine UE trajectories, and a
//! geometric multipath channel producing one CSI tensor per UE position.

mod channel;
mod container;
mod spec;
mod trajectory;

pub use channel::{synth_csi, ChannelModel};
pub use container::{
    read_container, read_scenario, write_features, write_scenario, Container, Payload, PayloadTag,
    CONTAINER_MAGIC, CONTAINER_VERSION,
};
pub use spec::{default_suite, ApArray, Area, ScenarioSpec};
pub use trajectory::meander_trajectory;

use crate::error::{Error, Result};
use crate::rng;
use crate::Tensor;

/// Ground-truth positions, timestamps and CSI for one scenario.
#[derive(Clone, Debug)]
pub struct ScenarioData {
    pub spec: ScenarioSpec,
    pub positions: Vec<[f64; 2]>,
    /// Sample indices along the trajectory; strictly increasing.
    pub timestamps: Vec<f64>,
    pub csi: Vec<Tensor>,
}

impl ScenarioData {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.timestamps.len() != n || self.csi.len() != n {
            return Err(Error::Data(format!(
                "scenario {}: positions/timestamps/csi lengths differ ({n}, {}, {})",
                self.spec.scenario_id,
                self.timestamps.len(),
                self.csi.len()
            )));
        }
        if self.timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!(
                "scenario {}: timestamps not strictly increasing",
                self.spec.scenario_id
            )));
        }
        let dims = self.spec.dims();
        if let Some(t) = self.csi.iter().find(|t| t.dims() != dims) {
            return Err(Error::Data(format!(
                "scenario {}: csi dims {:?} differ from spec {dims:?}",
                self.spec.scenario_id,
                t.dims()
            )));
        }
        Ok(())
    }
}

/// Sweeps the scenario's trajectory and synthesizes CSI at every point.
///
/// Each sample draws its small-scale fading from its own stream keyed by
/// `(seed, sample index)`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<ScenarioData> {
    spec.validate()?;
    let (positions, timestamps) = meander_trajectory(&spec.area, spec.traj_spacing_m)?;
    let model = ChannelModel::new(spec)?;
    let csi = positions
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let mut r = rng::stream(&[spec.seed, rng::tag::SAMPLE, n as u64]);
            model.synthesize(*p, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let data = ScenarioData { spec: spec.clone(), positions, timestamps, csi };
    data.validate()?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ScenarioSpec {
        let mut s = ScenarioSpec::indoor_like(5);
        s.area = Area { width_m: 1.0, height_m: 1.0 };
        s.traj_spacing_m = 0.25;
        s
    }

    #[test]
    fn generated_lengths_and_finiteness() {
        let spec = small_spec();
        let data = generate_scenario(&spec).unwrap();
        assert_eq!(data.len(), 25);
        assert_eq!(data.timestamps.len(), 25);
        assert!(data.csi.iter().all(|t| t.data().iter().all(|z| z.re.is_finite() && z.im.is_finite())));
        data.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec();
        let a = generate_scenario(&spec).unwrap();
        let b = generate_scenario(&spec).unwrap();
        assert_eq!(a.csi, b.csi);
        assert_eq!(a.positions, b.positions);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = small_spec();
        spec.n_ap = 0;
        assert!(generate_scenario(&spec).is_err());
    }
}
