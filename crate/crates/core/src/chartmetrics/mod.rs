//! Chart quality metrics: mean and 95th-percentile distance error,
//! trustworthiness, continuity, Kruskal stress and Rajski distance, plus
//! chart normalization and the subsampling policy for the O(N²) metrics.

mod distance_metrics;
mod error_metrics;
mod neighborhood;
mod report;

pub use distance_metrics::{
    kruskal_stress, kruskal_stress_from_distances, rajski_distance, rajski_from_distances,
};
pub use error_metrics::{mde, p95, percentile_linear};
pub use neighborhood::{continuity, neighborhood_size, trustworthiness, trustworthiness_continuity};
pub use report::{evaluate_all, normalize_chart, EvalConfig, MetricReport};
