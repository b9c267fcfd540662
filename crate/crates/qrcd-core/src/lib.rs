//! Quantum-reservoir-computing image denoiser.
//!
//! A chain of Rydberg atoms driven by input-dependent detunings acts as a
//! fixed nonlinear feature map: noisy images are compressed with PCA, the
//! scaled components are encoded as local detunings, and single/two-site
//! `Z` expectation values sampled over the evolution form the feature
//! embedding. A trainable MLP readout maps embeddings back to clean pixels;
//! an identical readout trained directly on the PCA components serves as
//! the classical baseline.
//!
//! Modules follow the pipeline order: [`data`] (MNIST ingest + speckle
//! noise), [`pca`], [`reservoir`] (state-vector simulation and feature
//! extraction), [`mlp`] (readout network), [`metrics`] (MSE/SSIM/Tenengrad),
//! and [`pipeline`] (stage orchestration, caching, CLI backend).

pub mod data;
pub mod error;
pub mod metrics;
pub mod mlp;
pub mod pca;
pub mod pipeline;
pub mod reservoir;
pub mod seed;

pub use data::{ImageSet, NoiseSpec, NoisyPair};
pub use error::{Error, Result};
pub use metrics::MetricReport;
pub use mlp::{MlpModel, TrainConfig};
pub use pca::{ComponentScaler, PcaModel};
pub use reservoir::{ExpectationMode, FeatureEmbedding, ReservoirSpec, StateVector};
