//! Link-level simulation of spatial-multiplexing MIMO with index modulation
//! over GFDM and OFDM, with zero-forcing, joint maximum-likelihood and
//! two-stage learned (ZF + CNN/FCNN) detectors.
//!
//! The dense linear algebra, waveform construction and neural fine stage are
//! generic over [`Real`] (`f32` or `f64`); the aliases below fix the scalar
//! used by the simulator: double precision for the classical chain, single
//! precision for the learned stage.

pub mod channel;
pub mod cli;
pub mod detect;
pub mod error;
pub mod im;
pub mod linalg;
pub mod modem;
pub mod neural;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex matrix of the classical signal chain.
pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
/// Prototype filter of the classical signal chain.
pub type PrototypeFilter64 = modem::PrototypeFilter<f64>;
/// Fine-detector model used by the simulator and CLI.
pub type DeepModel = neural::FineDetectorModel<f32>;
/// Training example matching [`DeepModel`].
pub type DeepExample = neural::TrainingExample<f32>;
/// Double-precision fine-detector model, used for gradient verification.
pub type FineDetectorModel64 = neural::FineDetectorModel<f64>;
