//! Guided Langevin sampling in the latent space of a shape decoder.
//!
//! The crate covers the whole pipeline used for 2D implicit-surface
//! reconstruction: a Gaussian-mixture or learned score prior, a differentiable
//! disk-union decoder, geometric guidance losses, the sampler family
//! (Langevin, half-denoising, guided Langevin with Adam), numerical reference
//! posteriors for 1D checks, and a small benchmark harness.

pub mod bench;
pub mod decoder;
pub mod contour;
pub mod error;
pub mod guidance;
pub mod io;
pub mod metrics;
pub mod reference;
pub mod rng;
pub mod samplers;
pub mod schedule;
pub mod score;
pub mod smallnet;
pub mod svg;
pub mod toy;
pub mod types;

pub use error::{Error, Result};
pub use rng::SampleRng;
pub use schedule::{AdamParams, NoiseSchedule, SamplerConfig};
pub use score::{GmmPrior, NoisePredictor, Score, ScoreOracle};
pub use types::{Latent, PointCloud2, Vec2};
