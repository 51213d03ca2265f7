//! Simulation-driven antenna array optimization through regression
//! emulators.
//!
//! The pipeline has four stages:
//!
//! 1. [`sim`]: a Monte Carlo mmWave downlink simulator, the slow
//!    ground truth mapping an [`ArrayConfig`] to a [`MetricVector`].
//! 2. [`dataset`]: random sampling of the layout space and a CSV-backed
//!    table of simulated samples.
//! 3. [`emulators`]: linear regression, Gaussian process regression,
//!    random forests and epsilon-SVR, each fitted per output metric.
//! 4. [`optimizer`]: constrained differential evolution over the fitted
//!    emulators, with grid and dataset baselines.
//!
//! [`evaluation`] holds the learning-curve and export tooling.

pub mod antenna;
pub mod dataset;
pub mod emulators;
pub mod error;
pub mod evaluation;
pub mod optimizer;
pub mod rng;
pub mod sim;
pub mod stats;

pub use antenna::{ArrayConfig, Direction};
pub use dataset::{Dataset, SplitSpec, Standardizer};
pub use emulators::{EmulatorModel, ModelKind, ModelSpec};
pub use error::{Error, Result};
pub use evaluation::LearningCurve;
pub use optimizer::{ObjectiveSpec, OptimizationResult, SearchSpace};
pub use sim::{Metric, MetricVector, SimParams};
