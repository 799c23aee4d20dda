//! Simulation of correlation plenoptic imaging with chaotic light.
//!
//! The crate computes the correlation function Γ(ρa, ρb) between a spatial
//! detector D_a and an angular detector D_b, either by direct quadrature,
//! by the closed form available at focus, or by a speckle Monte Carlo
//! ensemble, and reconstructs focused, defocused and refocused images from
//! it.

pub mod analysis;
pub mod correlation;
pub mod error;
pub mod image;
pub mod io;
pub mod optics;
pub mod refocus;
pub mod scene;

pub use error::{CpiError, Result};
pub use image::ImagePlane;
