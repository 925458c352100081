//! File formats, dataset layout, and command implementations for the
//! robust depth training system.
//!
//! The numerics live in `acdepth-core`; this crate adds everything that
//! touches the filesystem: PFM/PPM image IO, scene and config parsing,
//! checkpoints, CSV/JSON reports, run manifests, and the CLI commands
//! (`synth`, `train`, `eval`, `ablate`, `gradcheck`).

pub mod checkpoint;
pub mod cli;
pub mod config_file;
pub mod dataset;
pub mod error;
pub mod manifest;
pub mod pfm;
pub mod ppm;
pub mod report;
pub mod scenes;
pub mod scene_file;

pub use error::{AppError, AppResult};
