//! Refocusing: rescale Γ so that an out-of-focus tensor approximates the
//! focused one, then integrate over the angular detector.

use rayon::prelude::*;

use crate::correlation::{incoherent_image, GammaTensor, Provenance, TensorMeta};
use crate::error::{invalid, CpiError, Result};
use crate::image::ImagePlane;
use crate::optics::Grid1D;

/// Largest tolerated fraction of lookups falling outside D_a.
pub const MAX_OUT_OF_RANGE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefocusParams {
    /// Source to D_a distance of the recorded tensor.
    pub z_a: f64,
    /// Object distance to refocus on.
    pub z_b: f64,
    pub magnification: f64,
    pub interpolation: Interpolation,
}

impl RefocusParams {
    pub fn new(z_a: f64, z_b: f64, magnification: f64, interpolation: Interpolation) -> Result<Self> {
        for (name, v) in [("z_a", z_a), ("z_b", z_b), ("magnification", magnification)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            z_a,
            z_b,
            magnification,
            interpolation,
        })
    }

    /// Refocus on the tensor's own object distance.
    pub fn from_tensor(gamma: &GammaTensor) -> Self {
        Self {
            z_a: gamma.z_a(),
            z_b: gamma.z_b(),
            magnification: gamma.magnification(),
            interpolation: Interpolation::default(),
        }
    }

    pub fn with_target(mut self, z_b: f64) -> Result<Self> {
        self.z_b = z_b;
        Self::new(self.z_a, self.z_b, self.magnification, self.interpolation)
    }

    /// `z_a / z_b`.
    pub fn scale(&self) -> f64 {
        self.z_a / self.z_b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refocused {
    pub tensor: GammaTensor,
    /// Fraction of lookups that fell outside D_a and were zero-filled.
    pub out_of_range: f64,
}

/// Looks up Γ along one axis at a fractional index; `None` outside the grid.
fn axis_weights(axis: &Grid1D, x: f64, mode: Interpolation) -> Option<[(usize, f64); 2]> {
    let t = axis.fractional_index(x);
    let last = (axis.n() - 1) as f64;
    match mode {
        Interpolation::Nearest => {
            let r = t.round();
            (r >= 0.0 && r <= last).then_some([(r as usize, 1.0), (r as usize, 0.0)])
        }
        Interpolation::Linear => {
            if !(t >= 0.0 && t <= last) {
                return None;
            }
            let i0 = (t.floor() as usize).min(axis.n() - 2);
            let w = t - i0 as f64;
            Some([(i0, 1.0 - w), (i0 + 1, w)])
        }
    }
}

/// `Γ'(ρa, ρb) = Γ((z_a/z_b) ρa − (ρb/M)(1 − z_a/z_b), ρb)`, zero-filled
/// outside D_a. Fails when more than 20% of lookups are out of range.
pub fn refocus_scale(gamma: &GammaTensor, params: &RefocusParams) -> Result<Refocused> {
    let params = RefocusParams::new(params.z_a, params.z_b, params.magnification, params.interpolation)?;
    let meta = TensorMeta {
        z_a: params.z_b,
        z_b: params.z_b,
        provenance: Provenance::Refocused,
        ..gamma.meta()
    };
    if params.z_a == params.z_b {
        let tensor = GammaTensor::from_normalized(meta, gamma.values().to_vec(), gamma.raw_peak())?;
        return Ok(Refocused {
            tensor,
            out_of_range: 0.0,
        });
    }
    let alpha = params.scale();
    let shift = (1.0 - alpha) / params.magnification;
    let (na, nb) = (gamma.n_a(), gamma.n_b());
    let axes_a = gamma.grid_a().axes();
    let grid_a = *gamma.grid_a();
    let grid_b = *gamma.grid_b();
    let mode = params.interpolation;
    let mut values = vec![0.0; na * nb];
    let missed: usize = values
        .par_chunks_mut(nb)
        .enumerate()
        .map(|(ia, row)| {
            let (ax, ay) = grid_a.position(ia);
            let mut missed = 0;
            for (ib, v) in row.iter_mut().enumerate() {
                let (bx, by) = grid_b.position(ib);
                let wx = axis_weights(&axes_a[0], alpha * ax - shift * bx, mode);
                let wy = match axes_a.get(1) {
                    Some(ya) => axis_weights(ya, alpha * ay - shift * by, mode),
                    None => Some([(0, 1.0), (0, 0.0)]),
                };
                let (Some(wx), Some(wy)) = (wx, wy) else {
                    missed += 1;
                    continue;
                };
                let nx = axes_a[0].n();
                let mut acc = 0.0;
                for (iy, fy) in wy {
                    for (ix, fx) in wx {
                        if fx * fy != 0.0 {
                            acc += fx * fy * gamma.at(iy * nx + ix, ib);
                        }
                    }
                }
                *v = acc;
            }
            missed
        })
        .sum();
    let out_of_range = missed as f64 / (na * nb) as f64;
    if out_of_range > MAX_OUT_OF_RANGE {
        return Err(CpiError::RefocusOutOfRange {
            fraction: out_of_range,
        });
    }
    let tensor = GammaTensor::from_scaled(meta, values, gamma.raw_peak())?;
    Ok(Refocused { tensor, out_of_range })
}

/// Refocused image: [`refocus_scale`] followed by the sum over D_b.
pub fn refocus_integrate(gamma: &GammaTensor, params: &RefocusParams) -> Result<ImagePlane> {
    Ok(incoherent_image(&refocus_scale(gamma, params)?.tensor))
}
