use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{ComplexField, Wavenumber};
use super::grid::{Grid, Grid1D};
use crate::error::{invalid, CpiError, Result};

/// `exp(i * curvature * rho² / 2)`.
pub fn chirp_factor(rho: f64, curvature: f64) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * curvature * rho * rho)
}

/// Largest step keeping the phase change between neighbouring samples of a
/// chirp with the given curvature below π over `|x| <= half_extent`.
pub fn chirp_max_step(curvature: f64, half_extent: f64) -> f64 {
    max_step_for_slope(curvature.abs() * half_extent)
}

/// Largest step for a phase whose slope (rad/m) is bounded by `slope`.
pub fn max_step_for_slope(slope: f64) -> f64 {
    if slope > 0.0 {
        PI / slope
    } else {
        f64::INFINITY
    }
}

/// Fresnel propagation along one axis between two 1-D grids, stored as a
/// dense `dst.n() x src.n()` matrix including the source cell width.
#[derive(Debug, Clone)]
pub struct AxisPropagator {
    src: Grid1D,
    dst: Grid1D,
    matrix: Vec<Complex64>,
}

impl AxisPropagator {
    pub fn new(src: Grid1D, dst: Grid1D, distance: f64, k: Wavenumber) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(invalid("distance", format!("must be positive, got {distance}")));
        }
        let wk = k.k();
        let max_step = max_step_for_slope(wk * src.max_separation(&dst) / distance);
        if src.step() >= max_step {
            return Err(CpiError::Sampling {
                plane: format!("propagation over {distance:.4e} m"),
                step: src.step(),
                max_step,
            });
        }
        let norm = Complex64::from_polar(1.0 / (k.lambda() * distance).sqrt(), -PI / 4.0) * src.step();
        let curvature = wk / distance;
        let matrix = (0..dst.n())
            .into_par_iter()
            .flat_map_iter(|j| {
                let x2 = dst.coord(j);
                src.coords()
                    .map(move |x1| norm * chirp_factor(x2 - x1, curvature))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self { src, dst, matrix })
    }

    pub fn src(&self) -> &Grid1D {
        &self.src
    }

    pub fn dst(&self) -> &Grid1D {
        &self.dst
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        let n = self.src.n();
        &self.matrix[j * n..(j + 1) * n]
    }

    /// `out[j] = Σ_i K[j][i] input[i]` for strided input/output lanes.
    fn apply_strided(&self, input: &[Complex64], in_stride: usize, out: &mut [Complex64], out_stride: usize) {
        let n = self.src.n();
        for j in 0..self.dst.n() {
            let row = self.row(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += row[i] * input[i * in_stride];
            }
            out[j * out_stride] = acc;
        }
    }

    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dst.n()];
        self.apply_strided(input, 1, &mut out, 1);
        out
    }
}

/// Paraxial free-space propagator between two planes (1-D or separable 2-D),
/// `g(ρ₂; ρ₁, d) ∝ e^{ikd} e^{ik|ρ₂−ρ₁|²/(2d)}` evaluated by direct quadrature.
#[derive(Debug, Clone)]
pub struct FresnelPropagator {
    src: Grid,
    dst: Grid,
    axes: Vec<AxisPropagator>,
    carrier: Complex64,
}

impl FresnelPropagator {
    pub fn new(src: &Grid, dst: &Grid, distance: f64, k: Wavenumber) -> Result<Self> {
        if src.dims() != dst.dims() {
            return Err(CpiError::Dimension(format!(
                "cannot propagate a {}-D field onto a {}-D grid",
                src.dims(),
                dst.dims()
            )));
        }
        let axes = src
            .axes()
            .into_iter()
            .zip(dst.axes())
            .map(|(s, d)| AxisPropagator::new(s, d, distance, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            src: *src,
            dst: *dst,
            axes,
            carrier: Complex64::from_polar(1.0, (k.k() * distance).rem_euclid(2.0 * PI)),
        })
    }

    pub fn src(&self) -> &Grid {
        &self.src
    }

    pub fn dst(&self) -> &Grid {
        &self.dst
    }

    pub fn axes(&self) -> &[AxisPropagator] {
        &self.axes
    }

    /// The global `e^{ikd}` factor applied after the axis kernels.
    pub fn apply_carrier(&self) -> Complex64 {
        self.carrier
    }

    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = match (&self.src, &self.dst) {
            (Grid::One(_), Grid::One(_)) => self.axes[0].apply(input),
            (Grid::Two(s), Grid::Two(d)) => {
                let (kx, ky) = (&self.axes[0], &self.axes[1]);
                let mut rows = vec![Complex64::new(0.0, 0.0); s.y.n() * d.x.n()];
                for iy in 0..s.y.n() {
                    let src_row = &input[iy * s.x.n()..(iy + 1) * s.x.n()];
                    kx.apply_strided(src_row, 1, &mut rows[iy * d.x.n()..], 1);
                }
                let mut out = vec![Complex64::new(0.0, 0.0); d.len()];
                for jx in 0..d.x.n() {
                    ky.apply_strided(&rows[jx..], d.x.n(), &mut out[jx..], d.x.n());
                }
                out
            }
            _ => unreachable!("dimensions checked at construction"),
        };
        out.iter_mut().for_each(|v| *v *= self.carrier);
        out
    }
}

/// Propagates `field` over `distance` onto `dest`.
pub fn fresnel_propagate(
    field: &ComplexField,
    dest: &Grid,
    distance: f64,
    k: Wavenumber,
) -> Result<ComplexField> {
    let prop = FresnelPropagator::new(field.grid(), dest, distance, k)?;
    ComplexField::new(*dest, prop.apply(field.values()))
}
