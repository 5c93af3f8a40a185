//! Learned fine stage of the two-stage detector.
//!
//! Each ZF-equalized subblock `Ψ^l` (`T×u` complex) enters as a real
//! `(u, 2, T)` tensor, passes a width-1 convolution with `F` kernels and
//! tanh, is flattened feature-major, and goes through a `tanh` hidden layer
//! of width `τ` and a sigmoid output layer of `p·T` soft bits.

mod batch;
mod io;
mod model;
mod optim;
mod train;

pub use batch::{model_grad, predict_batch, BatchGradient, Workspace};
pub use io::{model_from_text, model_load, model_save, model_to_text, MODEL_MAGIC, MODEL_VERSION};
pub use model::{
    loss_eval, subblock_input, threshold_bits, FineDetectorModel, ModelDims, Params, TrainingExample,
};
pub use optim::{Optimizer, UpdateRule};
pub use train::{train_model, train_model_with, TrainingConfig, TrainingOutcome};

#[cfg(test)]
mod tests;
