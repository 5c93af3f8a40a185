//! Simulation harness: configuration, frame generation, training data,
//! Monte Carlo BER sweeps and complexity accounting.

pub mod ber;
pub mod complexity;
pub mod config;
pub mod dataset;
pub mod link;

pub use ber::{run_ber_sweep, BerPoint, BerReport, ReceiverKind, SimPlan, StoppingRule};
pub use complexity::{complexity_report, ComplexityInputs, ComplexityReport, ReferenceTarget};
pub use config::{RunConfig, SimSettings, SystemConfig, TrainSettings};
pub use dataset::{dataset_from_csv, dataset_to_csv, generate_dataset};
pub use link::{Frame, Link};
