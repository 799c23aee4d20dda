//! The correlation function Γ(ρa, ρb): direct quadrature, the closed form
//! at focus, and the speckle Monte Carlo ensemble, plus the images derived
//! from it.

pub mod accumulator;
pub mod analytic;
pub mod images;
pub mod rng;
pub mod speckle;
pub mod tensor;

pub use accumulator::CorrelationAccumulator;
pub use analytic::{gamma_analytic, gamma_analytic_with_aperture, gamma_focused_closed_form};
pub use images::{incoherent_image, source_image_map};
pub use rng::{frame_rng, mix64};
pub use speckle::{accumulate_frames, gamma_monte_carlo, generate_speckle_frame, SpeckleSimulator};
pub use tensor::{GammaTensor, Provenance, TensorMeta};
