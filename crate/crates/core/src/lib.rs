//! Core numerics for robust monocular depth-estimation training.
//!
//! Everything in this crate is pure computation over in-memory grids:
//!
//! - pinhole camera model, SE(3) poses, and differentiable inverse warping
//! - self-supervised photometric/smoothness losses with analytic gradients
//! - multi-granularity distillation objectives (result distillation,
//!   ordinal guidance, feature consistency)
//! - a tiny coordinate-conditioned depth network with handwritten backprop
//! - synthetic scene rendering with exact depth and parametric weather
//!   degradations
//! - Adam-based teacher/student training loops and the ablation driver
//! - standard depth evaluation metrics
//!
//! The crate is `no_std` (alloc required); all float math goes through
//! [`libm`] so results are identical with or without the standard library.
//! File formats, CSV logs, and the command-line driver live in the
//! companion `acdepth` crate.

#![no_std]

extern crate alloc;

pub mod camera;
pub mod error;
pub mod grid;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod ogd;
pub mod rng;
pub mod synth;
pub mod trainer;
pub mod warp;

pub mod gradcheck;

pub(crate) mod math;

pub use camera::{CameraIntrinsics, RigidPose};
pub use error::CoreError;
pub use grid::{FeatureStack, Mask, PixelGrid};
pub use losses::LossValue;
pub use metrics::DepthEvalReport;
pub use model::DepthNet;
pub use rng::Rng;
