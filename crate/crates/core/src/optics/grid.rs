use crate::error::{CpiError, Result};

/// Uniform sampling of one transverse axis.
///
/// Sample `i` sits at `center + (i - (n - 1) / 2) * step`, so an odd `n`
/// puts a sample exactly on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    step: f64,
    center: f64,
}

impl Grid1D {
    pub fn new(n: usize, step: f64, center: f64) -> Result<Self> {
        if n < 2 {
            return Err(CpiError::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(CpiError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if !center.is_finite() {
            return Err(CpiError::InvalidGrid("center must be finite".into()));
        }
        Ok(Self { n, step, center })
    }

    /// Centered grid covering at least `[center - half_width, center + half_width]`
    /// with the given step and an odd sample count.
    pub fn covering(half_width: f64, step: f64, center: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(CpiError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let half = (half_width / step).ceil() as usize;
        Self::new(2 * half.max(1) + 1, step, center)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Total width covered by the samples' cells: `n * step`.
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.step
    }

    /// Distance from the center to the outermost sample.
    pub fn half_span(&self) -> f64 {
        0.5 * (self.n - 1) as f64 * self.step
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.center + (i as f64 - 0.5 * (self.n - 1) as f64) * self.step
    }

    pub fn first(&self) -> f64 {
        self.coord(0)
    }

    pub fn last(&self) -> f64 {
        self.coord(self.n - 1)
    }

    /// Largest |x| over all samples.
    pub fn max_abs(&self) -> f64 {
        self.first().abs().max(self.last().abs())
    }

    pub fn coords(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.coord(i))
    }

    /// Continuous index of position `x` (0 at the first sample).
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x - self.first()) / self.step
    }

    /// Index of the sample nearest to `x`, if `x` lies within half a step of the grid.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let t = self.fractional_index(x).round();
        if t < 0.0 || t > (self.n - 1) as f64 {
            None
        } else {
            Some(t as usize)
        }
    }

    /// Same span, step divided by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(CpiError::InvalidGrid("refinement factor must be >= 1".into()));
        }
        Self::new((self.n - 1) * factor + 1, self.step / factor as f64, self.center)
    }

    /// Largest |x2 - x1| between a sample of `self` and a sample of `other`.
    pub fn max_separation(&self, other: &Grid1D) -> f64 {
        (other.last() - self.first())
            .abs()
            .max((self.last() - other.first()).abs())
    }
}

/// Product of two axes; values on it are stored row-major (y outer, x inner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x: Grid1D,
    pub y: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, y: Grid1D) -> Self {
        Self { x, y }
    }

    pub fn square(axis: Grid1D) -> Self {
        Self { x: axis, y: axis }
    }

    pub fn len(&self) -> usize {
        self.x.n() * self.y.n()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.x.n() + ix
    }
}

/// A transverse plane sampled in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

impl Grid {
    pub fn dims(&self) -> usize {
        match self {
            Grid::One(_) => 1,
            Grid::Two(_) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::One(g) => g.n(),
            Grid::Two(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integration weight of one sample: step (1-D) or step_x * step_y (2-D).
    pub fn cell(&self) -> f64 {
        match self {
            Grid::One(g) => g.step(),
            Grid::Two(g) => g.x.step() * g.y.step(),
        }
    }

    /// Axes in (x, y) order; a 1-D grid has only x.
    pub fn axes(&self) -> Vec<Grid1D> {
        match self {
            Grid::One(g) => vec![*g],
            Grid::Two(g) => vec![g.x, g.y],
        }
    }

    pub fn x(&self) -> Grid1D {
        match self {
            Grid::One(g) => *g,
            Grid::Two(g) => g.x,
        }
    }

    /// Position of flat sample `i` as (x, y); y is 0 in 1-D.
    pub fn position(&self, i: usize) -> (f64, f64) {
        match self {
            Grid::One(g) => (g.coord(i), 0.0),
            Grid::Two(g) => (g.x.coord(i % g.x.n()), g.y.coord(i / g.x.n())),
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| self.position(i))
    }

    /// Smallest step over the axes.
    pub fn min_step(&self) -> f64 {
        self.axes().iter().map(|a| a.step()).fold(f64::INFINITY, f64::min)
    }

    /// Largest distance of any sample from the origin along any single axis.
    pub fn max_abs(&self) -> f64 {
        self.axes().iter().map(|a| a.max_abs()).fold(0.0, f64::max)
    }

    pub fn refined(&self, factor: usize) -> Result<Grid> {
        Ok(match self {
            Grid::One(g) => Grid::One(g.refined(factor)?),
            Grid::Two(g) => Grid::Two(Grid2D::new(g.x.refined(factor)?, g.y.refined(factor)?)),
        })
    }
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::One(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::Two(g)
    }
}
