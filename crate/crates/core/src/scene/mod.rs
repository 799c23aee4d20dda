//! Source and object models, their sampled realizations, and the full
//! optical setup with its validation.

pub mod object;
pub mod setup;
pub mod source;

pub use object::{realized_detail, sample_object_aperture, Mask, ObjectKind, ObjectModel};
pub use setup::{validate_setup, BudgetCheck, OpticalSetup, PlaneCheck, SetupBuilder, SetupReport};
pub use source::{sample_source_intensity, SourceKind, SourceModel};
