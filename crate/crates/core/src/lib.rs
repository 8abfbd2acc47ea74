//! Evaluation toolkit for unpaired virtual try-on.
//!
//! * [`sdr`]: garment-to-body area ratio and the corrected distance between a
//!   real and a generated try-on.
//! * [`skeleton`] and [`perceptual`]: a 56-node pose grid and the
//!   skeleton-anchored LPIPS distance computed on patches around it.
//! * [`mask_maker`]: wearing-style classification and adaptive
//!   clothing-agnostic masks for training.
//! * [`harness`]: manifests, parallel batch evaluation, reports and the
//!   incorrect-sample mixing experiment.
//!
//! The metric and geometry code is generic over [`scalar::Real`] (and the
//! area ratios over [`scalar::Scalar`], which includes exact rationals). The
//! aliases below fix the scalar to `f64` unless suffixed.

pub mod annotations;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mask_maker;
pub mod perceptual;
pub mod scalar;
pub mod sdr;
pub mod skeleton;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::{Exact, Real, Scalar};

pub type Point = geometry::Point<f64>;
pub type PointF32 = geometry::Point<f32>;
pub type SkeletonGrid = skeleton::SkeletonGrid<f64>;
pub type SkeletonGridF32 = skeleton::SkeletonGrid<f32>;
pub type SdrScore = sdr::SdrScore<f64>;
pub type SdrScoreExact = sdr::SdrScore<Exact>;
pub type SlpipsScore = perceptual::SlpipsScore<f64>;
pub type SlpipsScoreF32 = perceptual::SlpipsScore<f32>;
pub type FeatureMap = perceptual::FeatureMap<f64>;
pub type Backend = Box<dyn perceptual::FeatureBackend<f64>>;
