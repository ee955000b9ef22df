//! Wave-particle duality in a Mach-Zehnder interferometer with unbalanced
//! photon losses.
//!
//! The crate is layered bottom-up:
//!
//! - [`optics`]: two-mode field propagation (splitters, phase, loss, detection)
//! - [`analytic`]: closed-form P, V, P^2 + V^2 for both layouts and loss
//!   placements, turning points and path/detector symmetrization
//! - [`protocols`]: simulated fringe scans, visibility extraction, which-way
//!   runs and ratio sweeps built on the field pipeline
//! - [`photon_mc`]: single-photon counting statistics through the same pipeline
//! - [`estimation`]: bounded damped least-squares fits of the loss model
//! - [`dataset`]: sweep datasets and their CSV encoding

pub mod analytic;
pub mod config;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod interferometer;
pub mod optics;
pub mod photon_mc;
pub mod protocols;
pub mod rng;

pub use analytic::ModelParams;
pub use config::{DualityPoint, ExperimentConfig, Layout, LossPlacement, ModelKind, Source};
pub use dataset::{DatasetError, SweepDataset};
pub use error::{DualityError, Result};
pub use estimation::{FitError, FitProblem, FitResult, Param};
pub use interferometer::{Interferometer, WhichWay};
pub use optics::{DetectorPair, LossPair, Readings, SplitRatio, TwoModeField};
pub use protocols::{FringeScan, Noise};
