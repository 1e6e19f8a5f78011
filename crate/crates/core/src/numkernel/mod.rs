//! Dense numeric kernels shared by every stage: complex 4-axis tensors,
//! row-major real matrices, the subcarrier IDFT, symmetric
//! eigendecomposition and pairwise distances.

mod dft;
mod distance;
mod eig;
pub(crate) mod matrix;
mod tensor;

pub use dft::{idft_subcarriers, idft_taps, TapTable};
pub use distance::{euclidean, pairwise_distances};
pub use eig::{sym_eig_desc, SymEigen};
pub use matrix::RealMatrix;
pub use tensor::{vectorize, ComplexTensor4, Dims4};
