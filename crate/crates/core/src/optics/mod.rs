//! Sampling grids, complex fields and the elementary optical kernels.

pub mod field;
pub mod fourier;
pub mod grid;
pub mod kernels;
pub mod sum;

pub use field::{ComplexField, RealField, Wavenumber};
pub use fourier::fourier_profile;
pub use grid::{Grid, Grid1D, Grid2D};
pub use kernels::{
    chirp_factor, chirp_max_step, fresnel_propagate, max_step_for_slope, AxisPropagator, FresnelPropagator,
};
pub use sum::{CompensatedSum, ComplexSum};
