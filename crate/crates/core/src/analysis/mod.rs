//! Closed-form figures of merit and image metrics.

pub mod budget;
pub mod metrics;
pub mod report;

pub use budget::{
    diffraction_limits, diffraction_limits_from, dof_gain, geometrical_optics_parameter,
    geometrical_optics_parameter_from, ghost_psf_sigma, perfect_refocus_bound, refocus_range, AlphaReading,
    DiffractionLimits, DofReport, PixelBudget, System,
};
pub use metrics::{centroid, measure_image, ncc, relative_l2, visibility, ImageMetrics};
pub use report::{analysis_report, MetricsReport, ReportRow};
