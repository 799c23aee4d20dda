use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{invalid, CpiError, Result};

/// Vacuum wavelength and the matching wavenumber `k = 2π/λ` (the `ω/c` of
/// the propagation formulas).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber {
    lambda: f64,
    k: f64,
}

impl Wavenumber {
    pub fn from_wavelength(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid(
                "lambda",
                format!("must be a positive length, got {lambda}"),
            ));
        }
        Ok(Self {
            lambda,
            k: 2.0 * PI / lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// Complex scalar amplitude sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CpiError::Dimension(format!(
                "field has {} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(CpiError::NonFinite("complex field"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let values = grid.positions().map(|(x, y)| f(x, y)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn intensity(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// `Σ |E|² · cell`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()
    }
}

/// Real samples on a grid (intensity profiles, aperture moduli).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CpiError::Dimension(format!(
                "field has {} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CpiError::NonFinite("real field"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid.positions().map(|(x, y)| f(x, y)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Riemann sum `Σ f · cell`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell()
    }
}
