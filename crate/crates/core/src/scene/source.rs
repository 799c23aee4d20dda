use crate::error::{invalid, CpiError, Result};
use crate::optics::{Grid, Grid1D, RealField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    /// `F(ρ) = exp(−|ρ|²/(2σ²))`, width `D_s = 3σ`.
    Gaussian { sigma: f64 },
    /// Uniform disk (a segment in 1-D), width `D_s = 2r`.
    FlatDisk { radius: f64 },
    /// Single emitting point, used for source-to-sensor calibration maps.
    Point,
}

/// Intensity profile `F(ρs)` of the chaotic source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    kind: SourceKind,
    center: (f64, f64),
}

impl SourceModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive("source_sigma", sigma)?;
        Ok(Self::from_kind(SourceKind::Gaussian { sigma }))
    }

    pub fn flat_disk(radius: f64) -> Result<Self> {
        positive("source_radius", radius)?;
        Ok(Self::from_kind(SourceKind::FlatDisk { radius }))
    }

    pub fn point() -> Self {
        Self::from_kind(SourceKind::Point)
    }

    fn from_kind(kind: SourceKind) -> Self {
        Self {
            kind,
            center: (0.0, 0.0),
        }
    }

    pub fn with_center(mut self, x: f64, y: f64) -> Self {
        self.center = (x, y);
        self
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Effective source width `D_s` (0 for a point source).
    pub fn width(&self) -> f64 {
        match self.kind {
            SourceKind::Gaussian { sigma } => 3.0 * sigma,
            SourceKind::FlatDisk { radius } => 2.0 * radius,
            SourceKind::Point => 0.0,
        }
    }

    /// Whether `F(x, y) = f(x) g(y)`; the 2-D engines rely on it.
    pub fn is_separable(&self) -> bool {
        !matches!(self.kind, SourceKind::FlatDisk { .. })
    }

    /// Continuous profile at `(x, y)`; in 1-D pass `y = center.1`.
    /// A point source has no continuous profile and evaluates to 0.
    pub fn intensity_at(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        match self.kind {
            SourceKind::Gaussian { sigma } => (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp(),
            SourceKind::FlatDisk { radius } => {
                if dx * dx + dy * dy <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            SourceKind::Point => 0.0,
        }
    }

    /// Closed-form `∫F` over a line (1-D) or the plane (2-D); `None` for a point.
    pub fn integral(&self, dims: usize) -> Option<f64> {
        use std::f64::consts::PI;
        match (self.kind, dims) {
            (SourceKind::Gaussian { sigma }, 1) => Some(sigma * (2.0 * PI).sqrt()),
            (SourceKind::Gaussian { sigma }, _) => Some(2.0 * PI * sigma * sigma),
            (SourceKind::FlatDisk { radius }, 1) => Some(2.0 * radius),
            (SourceKind::FlatDisk { radius }, _) => Some(PI * radius * radius),
            (SourceKind::Point, _) => None,
        }
    }

    /// One-axis factor of a separable profile along the axis whose center
    /// coordinate is `center`.
    pub(crate) fn axis_profile(&self, axis: &Grid1D, center: f64) -> Result<Vec<f64>> {
        match self.kind {
            SourceKind::Gaussian { sigma } => Ok(axis
                .coords()
                .map(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp())
                .collect()),
            SourceKind::Point => {
                let mut v = vec![0.0; axis.n()];
                v[point_index(axis, center, "point source")?] = 1.0;
                Ok(v)
            }
            SourceKind::FlatDisk { .. } => Err(CpiError::Unsupported(
                "flat-disk source profile is not separable".into(),
            )),
        }
    }
}

/// Samples `F(ρs)` on `grid`: non-negative, a Gaussian peaks at 1, a point
/// source is a single unit sample at the grid point nearest its center.
pub fn sample_source_intensity(source: &SourceModel, grid: &Grid) -> Result<RealField> {
    let ds = source.width();
    for axis in grid.axes() {
        if axis.extent() < ds {
            return Err(invalid(
                "source grid",
                format!(
                    "extent {:.4e} m is narrower than the source width {:.4e} m",
                    axis.extent(),
                    ds
                ),
            ));
        }
    }
    let (cx, cy) = source.center();
    match (source.kind(), grid) {
        (SourceKind::Point, Grid::One(g)) => RealField::new(*grid, source.axis_profile(g, cx)?),
        (SourceKind::Point, Grid::Two(g)) => {
            let ix = point_index(&g.x, cx, "point source")?;
            let iy = point_index(&g.y, cy, "point source")?;
            let mut v = vec![0.0; g.len()];
            v[g.index(ix, iy)] = 1.0;
            RealField::new(*grid, v)
        }
        (_, Grid::One(_)) => RealField::from_fn(*grid, |x, _| source.intensity_at(x, cy)),
        (_, Grid::Two(_)) => RealField::from_fn(*grid, |x, y| source.intensity_at(x, y)),
    }
}

pub(crate) fn point_index(axis: &Grid1D, x: f64, what: &str) -> Result<usize> {
    axis.nearest(x).ok_or_else(|| {
        CpiError::InvalidGrid(format!(
            "{what} at {x:.4e} m lies outside [{:.4e}, {:.4e}] m",
            axis.first(),
            axis.last()
        ))
    })
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("positive length required, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(half: f64, step: f64) -> Grid {
        Grid::One(Grid1D::covering(half, step, 0.0).unwrap())
    }

    #[test]
    fn gaussian_peak_and_one_sigma_values() {
        let s = SourceModel::gaussian(0.6e-3).unwrap();
        assert_eq!(s.width(), 3.0 * 0.6e-3);
        assert_eq!(s.intensity_at(0.0, 0.0), 1.0);
        assert!((s.intensity_at(0.6e-3, 0.0) - (-0.5f64).exp()).abs() < 1e-15);
        let f = sample_source_intensity(&s, &line(2.7e-3, 10e-6)).unwrap();
        let peak = f.values().iter().cloned().fold(0.0, f64::max);
        assert_eq!(peak, 1.0);
    }

    #[test]
    fn flat_disk_has_compact_support() {
        let r = 0.5e-3;
        let s = SourceModel::flat_disk(r).unwrap();
        assert_eq!(s.intensity_at(1.01 * r, 0.0), 0.0);
        assert_eq!(s.intensity_at(0.99 * r, 0.0), 1.0);
    }

    #[test]
    fn rejects_bad_parameters_and_narrow_grids() {
        assert!(SourceModel::gaussian(0.0).is_err());
        assert!(SourceModel::flat_disk(-1.0).is_err());
        let s = SourceModel::gaussian(0.6e-3).unwrap();
        assert!(sample_source_intensity(&s, &line(0.5e-3, 10e-6)).is_err());
    }

    #[test]
    fn sampled_profiles_integrate_to_closed_form() {
        for s in [
            SourceModel::gaussian(0.6e-3).unwrap(),
            SourceModel::flat_disk(0.9e-3).unwrap(),
        ] {
            let f = sample_source_intensity(&s, &line(3.0e-3, 2e-6)).unwrap();
            let exact = s.integral(1).unwrap();
            assert!((f.integral() / exact - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn point_source_is_one_sample() {
        let s = SourceModel::point().with_center(0.3e-3, 0.0);
        let g = line(0.5e-3, 1e-6);
        let f = sample_source_intensity(&s, &g).unwrap();
        let hot: Vec<usize> = (0..g.len()).filter(|&i| f.values()[i] > 0.0).collect();
        assert_eq!(hot.len(), 1);
        assert!((g.position(hot[0]).0 - 0.3e-3).abs() < 1e-12);
    }
}
