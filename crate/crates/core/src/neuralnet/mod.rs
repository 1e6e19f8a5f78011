//! Multilayer perceptrons trained from scratch: Glorot initialization,
//! ReLU hidden layers with a linear output layer, exact backpropagation,
//! Adam, and the loss functions used by the embedding and downstream
//! stages.

mod adam;
mod checkpoint;
mod loss;
mod mlp;

pub use adam::AdamConfig;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{ae_loss, mse_loss, siamese_loss, triplet_loss, LossGrad, TripletLoss, SIAMESE_EPS};
pub use mlp::{ForwardCache, Gradients, Layer, MlpModel, MlpSpec};
