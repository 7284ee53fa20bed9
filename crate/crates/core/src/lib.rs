//! Fatigue crack growth prediction toolkit.
//!
//! Simulates edge cracks in plates under sliced Gaussian loading, builds
//! voxel libraries of the growing crack, trains a VAE + LSTM + feed-forward
//! surrogate on them and runs a self-correcting digital-twin loop that
//! forecasts the remaining crack path and life from partial observations.

pub mod cli;
pub mod config;
pub mod container;
pub mod error;
pub mod fracture;
pub mod library;
pub mod loads;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod raster;
pub mod sax;
pub mod svg;
pub mod twin;

pub use error::{FcgError, Result};
