//! Scenario-specific heads on frozen embeddings (positioning and Siamese
//! channel charting), PCA charts, and the supervised end-to-end baseline.

mod export;
mod heads;
mod pca;
mod scs_ee;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::neuralnet::{AdamConfig, MlpModel};
use crate::numkernel::RealMatrix;
use crate::scalar::Real;

pub use export::{write_chart_csv, CHART_CSV_HEADER};
pub use heads::{predict, predict_batch, train_cc_siamese, train_pos_head, TrainedHead, HEAD_HIDDEN};
pub use pca::{cc_pca, PcaProjection};
pub use scs_ee::{train_scs_ee, ScsOutput, ScsTask, SCS_EE_HIDDEN};

/// Whether chart coordinates are positions in meters or an arbitrary frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateKind {
    Metric,
    Arbitrary,
}

impl CoordinateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CoordinateKind::Metric => "metric",
            CoordinateKind::Arbitrary => "arbitrary",
        }
    }
}

/// One estimated or pseudo position per sample, as rows of an N×d matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoints<T = f64> {
    pub points: RealMatrix<T>,
    pub kind: CoordinateKind,
}

impl<T: Real> ChartPoints<T> {
    pub fn new(points: RealMatrix<T>, kind: CoordinateKind) -> Result<Self> {
        if !points.is_finite() {
            return Err(Error::Numeric("chart contains non-finite coordinates".into()));
        }
        Ok(Self { points, kind })
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }
}

/// Optimization settings shared by every downstream network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    /// Passes over the scenario's training partition.
    pub epochs: usize,
    pub batch_size: usize,
    /// Chart dimension `d`.
    pub output_dim: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig { epochs: 200, batch_size: 100, output_dim: 2, adam: AdamConfig::default(), seed: 0 }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size < 2 || self.output_dim == 0 {
            return Err(Error::Config(
                "heads need epochs >= 1, batch_size >= 2 and output_dim >= 1".into(),
            ));
        }
        self.adam.validate()
    }
}

pub(crate) fn check_rows(a: &RealMatrix<f64>, b: &RealMatrix<f64>, what: &str) -> Result<()> {
    ensure!(a.rows() == b.rows(), "{what}: {} rows vs {} rows", a.rows(), b.rows());
    Ok(())
}

pub(crate) type Model = MlpModel<f64>;
