use super::heads::{fit_regressor, fit_siamese};
use super::{cc_pca, ChartPoints, HeadConfig, Model, PcaProjection};
use crate::error::Result;
use crate::Matrix;

/// Hidden widths of the end-to-end baseline.
pub const SCS_EE_HIDDEN: [usize; 7] = [320, 160, 80, 40, 20, 10, 5];

/// Which chart the end-to-end baseline produces. Only positioning sees
/// ground truth.
#[derive(Clone, Copy, Debug)]
pub enum ScsTask<'a> {
    Pos { positions: &'a Matrix },
    CcSiamese,
    CcPca,
}

#[derive(Clone, Debug)]
pub struct ScsOutput {
    /// `None` for the PCA chart, which has no trained network.
    pub model: Option<Model>,
    pub chart: ChartPoints,
    pub epoch_losses: Vec<f64>,
}

/// Scenario-specific deep network on unaugmented features.
pub fn train_scs_ee(features: &Matrix, test_features: &Matrix, task: ScsTask<'_>, cfg: &HeadConfig) -> Result<ScsOutput> {
    match task {
        ScsTask::Pos { positions } => {
            let h = fit_regressor(features, positions, test_features, &SCS_EE_HIDDEN, cfg)?;
            Ok(ScsOutput { model: Some(h.model), chart: h.chart, epoch_losses: h.epoch_losses })
        }
        ScsTask::CcSiamese => {
            let h = fit_siamese(features, test_features, &SCS_EE_HIDDEN, cfg)?;
            Ok(ScsOutput { model: Some(h.model), chart: h.chart, epoch_losses: h.epoch_losses })
        }
        ScsTask::CcPca => {
            let chart = if std::ptr::eq(features, test_features) {
                cc_pca(features, cfg.output_dim)?
            } else {
                let p = PcaProjection::fit(features, cfg.output_dim)?;
                ChartPoints::new(p.project(test_features)?, super::CoordinateKind::Arbitrary)?
            };
            Ok(ScsOutput { model: None, chart, epoch_losses: Vec::new() })
        }
    }
}
