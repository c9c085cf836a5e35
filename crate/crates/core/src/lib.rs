//! Physics-grounded synthetic video generation and trajectory scoring.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`scene`] samples a seeded scene and its prompt.
//! 2. [`sim`] integrates rigid-body dynamics at a fixed substep.
//! 3. [`render`] rasterizes each frame into pixel-aligned image buffers.
//! 4. [`dataset`] writes samples under a JSON-lines manifest.
//!
//! [`pis`] scores 2-D object tracks with the physical invariance score and
//! [`projection`] provides the closed-form pinhole kinematics used to check it.

pub mod dataset;
pub mod error;
pub mod numfmt;
pub mod pis;
pub mod projection;
pub mod render;
pub mod scene;
pub mod sim;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
