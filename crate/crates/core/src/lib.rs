//! Radiance fields to full-color digital holograms.
//!
//! The crate is organised as a chain of stages, each usable on its own:
//!
//! * [`field`] complex and real 2D grids, unitary FFTs, PFM/PNG interchange
//! * [`radiance`] a trainable voxel radiance field with differentiable volume
//!   rendering, novel-view and depth rendering
//! * [`propagation`] band-limited angular spectrum propagation
//! * [`cgh`] layered RGB-D hologram synthesis, linear-phase carrier,
//!   double-phase encoding and CLAHE enhancement
//! * [`reconstruct`] simulated 4f decoding, numerical refocusing and metrics
//! * [`pipeline`] synthetic scenes, configuration and the end-to-end run
//!
//! The runnable programs under `examples/` walk through each stage.

pub mod cgh;
pub mod error;
pub mod field;
pub mod pipeline;
pub mod propagation;
pub mod radiance;
pub mod reconstruct;

pub use error::{Error, Result};
pub use field::{ComplexField, RealImage};
