use super::tensor::GammaTensor;
use crate::error::{invalid, Result};
use crate::image::ImagePlane;

/// Ghost image on D_a: Γ summed over every D_b pixel (times the pixel cell).
pub fn incoherent_image(gamma: &GammaTensor) -> ImagePlane {
    let cell = gamma.grid_b().cell();
    let values = (0..gamma.n_a())
        .map(|ia| gamma.row(ia).iter().sum::<f64>() * cell)
        .collect();
    ImagePlane::with_scale(*gamma.grid_a(), values, gamma.raw_peak())
        .expect("row sums of a valid tensor are finite and non-negative")
}

/// The slice Γ(ρa_ia0, ·) over D_b; with a point-like source it maps the
/// source position onto D_b (ρb = −M ρs).
pub fn source_image_map(gamma: &GammaTensor, ia0: usize) -> Result<ImagePlane> {
    if ia0 >= gamma.n_a() {
        return Err(invalid(
            "rho_a0",
            format!("index {ia0} outside D_a with {} samples", gamma.n_a()),
        ));
    }
    ImagePlane::with_scale(*gamma.grid_b(), gamma.row(ia0).to_vec(), gamma.raw_peak())
}
