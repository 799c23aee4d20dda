use crate::error::{CpiError, Result};
use crate::optics::Grid;

/// Real non-negative image, normalized to peak 1, with the pre-normalization
/// peak kept as `raw_peak`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    grid: Grid,
    values: Vec<f64>,
    raw_peak: f64,
}

impl ImagePlane {
    /// Normalizes `values` to peak 1. An all-zero image stays zero with
    /// `raw_peak = 0`.
    pub fn from_raw(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::with_scale(grid, values, 1.0)
    }

    /// Like [`from_raw`](Self::from_raw) with the raw peak multiplied by
    /// `scale` (for images derived from an already normalized tensor).
    pub fn with_scale(grid: Grid, mut values: Vec<f64>, scale: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CpiError::Dimension(format!(
                "image has {} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CpiError::NonFinite("image"));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(CpiError::Format(format!("image has negative sample {v}")));
        }
        let peak = values.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            values.iter_mut().for_each(|v| *v /= peak);
        }
        Ok(Self {
            grid,
            values,
            raw_peak: peak * scale,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn raw_peak(&self) -> f64 {
        self.raw_peak
    }

    /// Row of a 2-D image (the whole image in 1-D).
    pub fn row(&self, iy: usize) -> &[f64] {
        let nx = self.grid.x().n();
        &self.values[iy * nx..(iy + 1) * nx]
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.grid.x().n()
    }
}
