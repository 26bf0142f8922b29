//! Two-stage residual bootstrap for ridge-regression contrasts.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the
//! simulation harness and the theory checks run in `f64`.
pub mod designs;
mod error;
pub mod harness;
pub mod linmodel;
pub mod mallows;
mod regression;
pub mod resampling;
mod scalar;
pub mod theory;
pub mod tuning;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset64 = linmodel::Dataset<f64>;
pub type Dataset32 = linmodel::Dataset<f32>;
pub type Spectrum64 = linmodel::Spectrum<f64>;
pub type Spectrum32 = linmodel::Spectrum<f32>;
pub type ConfidenceInterval64 = resampling::ConfidenceInterval<f64>;
pub type ConfidenceInterval32 = resampling::ConfidenceInterval<f32>;
pub type Empirical64 = mallows::EmpiricalDistribution<f64>;
pub type Empirical32 = mallows::EmpiricalDistribution<f32>;
/// Generator behind every seeded stream.
pub type SimRng = rand_chacha::ChaCha8Rng;
