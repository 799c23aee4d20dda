use crate::error::{CpiError, Result};
use crate::optics::Grid;

/// How a tensor was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    MonteCarlo { n_frames: u64, seed: u64 },
    FocusedClosedForm,
    Refocused,
}

/// Sampled Γ(ρa, ρb), peak-normalized, stored row-major with the ρa index
/// outermost (`values[ia * n_b + ib]`; 2-D indices are themselves row-major,
/// y outer).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTensor {
    grid_a: Grid,
    grid_b: Grid,
    values: Vec<f64>,
    z_a: f64,
    z_b: f64,
    magnification: f64,
    raw_peak: f64,
    provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorMeta {
    pub grid_a: Grid,
    pub grid_b: Grid,
    pub z_a: f64,
    pub z_b: f64,
    pub magnification: f64,
    pub provenance: Provenance,
}

impl GammaTensor {
    /// Normalizes raw values to peak 1, recording the raw peak.
    pub fn from_raw(meta: TensorMeta, values: Vec<f64>) -> Result<Self> {
        Self::from_scaled(meta, values, 1.0)
    }

    /// Like [`from_raw`](Self::from_raw) for values expressed in units of
    /// `scale` (the recorded raw peak is multiplied by it).
    pub fn from_scaled(meta: TensorMeta, mut values: Vec<f64>, scale: f64) -> Result<Self> {
        check_values(&meta, &values)?;
        let peak = values.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            values.iter_mut().for_each(|v| *v /= peak);
        }
        Self::from_normalized(meta, values, peak * scale)
    }

    /// Wraps values that are already normalized (e.g. read back from disk).
    pub fn from_normalized(meta: TensorMeta, values: Vec<f64>, raw_peak: f64) -> Result<Self> {
        check_values(&meta, &values)?;
        if meta.grid_a.dims() != meta.grid_b.dims() {
            return Err(CpiError::Dimension(
                "grid_a and grid_b differ in dimension".into(),
            ));
        }
        for (name, z) in [
            ("z_a", meta.z_a),
            ("z_b", meta.z_b),
            ("magnification", meta.magnification),
        ] {
            if !(z.is_finite() && z > 0.0) {
                return Err(CpiError::Format(format!("{name} must be positive, got {z}")));
            }
        }
        if !raw_peak.is_finite() || raw_peak < 0.0 {
            return Err(CpiError::Format(format!("invalid raw peak {raw_peak}")));
        }
        Ok(Self {
            grid_a: meta.grid_a,
            grid_b: meta.grid_b,
            values,
            z_a: meta.z_a,
            z_b: meta.z_b,
            magnification: meta.magnification,
            raw_peak,
            provenance: meta.provenance,
        })
    }

    pub fn meta(&self) -> TensorMeta {
        TensorMeta {
            grid_a: self.grid_a,
            grid_b: self.grid_b,
            z_a: self.z_a,
            z_b: self.z_b,
            magnification: self.magnification,
            provenance: self.provenance,
        }
    }

    pub fn grid_a(&self) -> &Grid {
        &self.grid_a
    }

    pub fn grid_b(&self) -> &Grid {
        &self.grid_b
    }

    pub fn n_a(&self) -> usize {
        self.grid_a.len()
    }

    pub fn n_b(&self) -> usize {
        self.grid_b.len()
    }

    pub fn dims(&self) -> usize {
        self.grid_a.dims()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ia: usize, ib: usize) -> f64 {
        self.values[ia * self.n_b() + ib]
    }

    /// Γ(ρa_ia, ·) over all of D_b.
    pub fn row(&self, ia: usize) -> &[f64] {
        let nb = self.n_b();
        &self.values[ia * nb..(ia + 1) * nb]
    }

    pub fn z_a(&self) -> f64 {
        self.z_a
    }

    pub fn z_b(&self) -> f64 {
        self.z_b
    }

    pub fn magnification(&self) -> f64 {
        self.magnification
    }

    /// Peak before normalization (arbitrary units).
    pub fn raw_peak(&self) -> f64 {
        self.raw_peak
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

fn check_values(meta: &TensorMeta, values: &[f64]) -> Result<()> {
    let expected = meta.grid_a.len() * meta.grid_b.len();
    if values.len() != expected {
        return Err(CpiError::Dimension(format!(
            "tensor has {} values, grids need {expected}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CpiError::NonFinite("correlation tensor"));
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(CpiError::Format(format!(
            "correlation tensor has negative entry {v}"
        )));
    }
    Ok(())
}
