//! Joint models of PDE coefficient/solution field pairs learned from
//! partial observations.
//!
//! The crate covers the full pipeline: synthetic data generation for four
//! classical PDE families ([`pde`]), measurement masks and sub-masks
//! ([`mask`]), a small convolutional/spectral network with hand-written
//! gradients ([`model`]), masked rectified-flow and direct-regression
//! training plus ODE sampling ([`flow`]), an exact Gaussian-process
//! reference on small grids ([`oracle`]), and evaluation metrics with the
//! one-point transition sweep ([`metrics`]).
//!
//! All randomness is seeded ChaCha8; every public entry point is
//! deterministic in its seed arguments, with or without the `parallel`
//! feature.

pub mod config;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod grf;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod par;
pub mod pde;
pub mod seeds;

pub use error::{Error, Result};
pub use field::Field;
