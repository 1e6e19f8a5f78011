//! Self-supervised, cross-scenario vector embeddings of channel state
//! information, with scenario-specific positioning and channel-charting
//! heads and the usual chart quality metrics.
//!
//! The numeric kernels ([`numkernel`], [`neuralnet`], [`chartmetrics`]) are
//! generic over [`Real`]; the data pipeline works in `f64`. The aliases
//! below name the `f64` instantiations used throughout.

pub mod error;
pub mod numkernel;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub mod chartmetrics;
pub mod downstream;
pub mod embedtrain;
pub mod neuralnet;
pub mod preprocess;
pub mod scenegen;

pub type Tensor = numkernel::ComplexTensor4<f64>;
pub type Matrix = numkernel::RealMatrix<f64>;
pub type Mlp = neuralnet::MlpModel<f64>;
pub type MlpGradients = neuralnet::Gradients<f64>;
