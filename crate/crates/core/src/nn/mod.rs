//! Minimal tensor/layer engine and the denoise+regress network.
//!
//! Activations of convolutional layers are laid out channel-major over the
//! whole batch (`[channels][batch][len]`), which turns a 1-D convolution into
//! a single matrix product against an im2col buffer. Dense layers use
//! `[batch][features]`. All products go through [`Scalar::gemm`].

mod adam;
mod layers;
mod model;
mod scalar;
mod tensor;

pub use adam::Adam;
pub use layers::{flatten_channels, relu_backward, relu_forward, unflatten_channels, Conv1d, Dense};
pub use model::{
    loss, Architecture, BackwardScratch, Batch, ForwardTrace, Gradients, LossBreakdown, LossWeights, Model,
    Prediction, Workspace,
};
pub use scalar::Scalar;
pub use tensor::Tensor;
