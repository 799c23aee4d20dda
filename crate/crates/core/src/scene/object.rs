use std::path::Path;

use num_complex::Complex64;

use super::source::{point_index, positive};
use crate::error::{invalid, CpiError, Result};
use crate::optics::{ComplexField, Grid, Grid1D};

/// Transmission mask on its own regular grid (row-major, rows along y).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    x_step: f64,
    y_step: f64,
    values: Vec<f64>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, x_step: f64, y_step: f64, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("mask", "needs at least one row and one column"));
        }
        positive("mask x_step", x_step)?;
        positive("mask y_step", y_step)?;
        if values.len() != rows * cols {
            return Err(invalid(
                "mask",
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("mask", format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            rows,
            cols,
            x_step,
            y_step,
            values,
        })
    }

    /// Parses `rows cols x_step y_step` followed by `rows * cols` values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut header = |name: &str| {
            tokens
                .next()
                .ok_or_else(|| CpiError::Format(format!("mask header is missing {name}")))
                .map(str::to_owned)
        };
        let rows = parse_num::<usize>(&header("rows")?, "rows")?;
        let cols = parse_num::<usize>(&header("cols")?, "cols")?;
        let x_step = parse_num::<f64>(&header("x_step")?, "x_step")?;
        let y_step = parse_num::<f64>(&header("y_step")?, "y_step")?;
        let values = tokens
            .map(|t| parse_num::<f64>(t, "mask value"))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, x_step, y_step, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn x_step(&self) -> f64 {
        self.x_step
    }

    pub fn y_step(&self) -> f64 {
        self.y_step
    }

    fn half_x(&self) -> f64 {
        0.5 * self.cols as f64 * self.x_step
    }

    fn half_y(&self) -> f64 {
        0.5 * self.rows as f64 * self.y_step
    }

    /// Nearest-neighbour lookup relative to the mask center; 0 outside.
    fn value_at(&self, dx: f64, dy: f64) -> f64 {
        let col = (dx / self.x_step + 0.5 * (self.cols - 1) as f64).round();
        let row = (dy / self.y_step + 0.5 * (self.rows - 1) as f64).round();
        if col < 0.0 || row < 0.0 || col >= self.cols as f64 || row >= self.rows as f64 {
            return 0.0;
        }
        self.values[row as usize * self.cols + col as usize]
    }

    /// Shortest interior run of constant value along rows and columns, in meters.
    fn smallest_feature(&self) -> Option<f64> {
        let rows = (0..self.rows).map(|r| {
            (
                self.values[r * self.cols..(r + 1) * self.cols].to_vec(),
                self.x_step,
            )
        });
        let cols = (0..self.cols).map(|c| {
            (
                (0..self.rows).map(|r| self.values[r * self.cols + c]).collect(),
                self.y_step,
            )
        });
        rows.chain(cols)
            .filter_map(|(line, step): (Vec<f64>, f64)| shortest_interior_run(&line, step))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }
}

fn parse_num<T: std::str::FromStr>(token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| CpiError::Format(format!("cannot parse {what} from `{token}`")))
}

/// Runs of equal value that do not touch either end of the line; when the
/// line has no interior run the shortest open run counts instead.
fn shortest_interior_run(line: &[f64], step: f64) -> Option<f64> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=line.len() {
        if i == line.len() || line[i] != line[start] {
            runs.push((start, i, line[start]));
            start = i;
        }
    }
    let interior = runs
        .iter()
        .filter(|&&(s, e, _)| s > 0 && e < line.len())
        .map(|&(s, e, _)| (e - s) as f64 * step)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    interior.or_else(|| {
        runs.iter()
            .filter(|&&(_, _, v)| v > 0.0)
            .map(|&(s, e, _)| (e - s) as f64 * step)
            .reduce(f64::min)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectKind {
    SingleSlit {
        width: f64,
    },
    DoubleSlit {
        width: f64,
        separation: f64,
    },
    TripleSlit {
        width: f64,
        separation: f64,
    },
    /// `bars` bars of width `bar_width` with equal gaps (period `2 * bar_width`).
    BarChart {
        bar_width: f64,
        bars: usize,
    },
    Point,
    CustomMask(Mask),
}

/// Transmissive aperture `A(ρo)`. Slits and bars run along y; in 2-D they
/// are cut to `height` (bar charts default to five bar widths, slits are
/// unbounded).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    kind: ObjectKind,
    center: (f64, f64),
    height: Option<f64>,
}

impl ObjectModel {
    pub fn single_slit(width: f64) -> Result<Self> {
        positive("slit_width", width)?;
        Ok(Self::from_kind(ObjectKind::SingleSlit { width }))
    }

    pub fn double_slit(width: f64, separation: f64) -> Result<Self> {
        Self::slits(width, separation)
            .map(|(width, separation)| Self::from_kind(ObjectKind::DoubleSlit { width, separation }))
    }

    pub fn triple_slit(width: f64, separation: f64) -> Result<Self> {
        Self::slits(width, separation)
            .map(|(width, separation)| Self::from_kind(ObjectKind::TripleSlit { width, separation }))
    }

    fn slits(width: f64, separation: f64) -> Result<(f64, f64)> {
        positive("slit_width", width)?;
        positive("slit_separation", separation)?;
        if separation <= width {
            return Err(invalid(
                "slit_separation",
                format!("must exceed the slit width ({separation} <= {width})"),
            ));
        }
        Ok((width, separation))
    }

    pub fn bar_chart(bar_width: f64, bars: usize) -> Result<Self> {
        positive("bar_width", bar_width)?;
        if bars == 0 {
            return Err(invalid("bars", "need at least one bar"));
        }
        Ok(Self::from_kind(ObjectKind::BarChart { bar_width, bars }))
    }

    pub fn point() -> Self {
        Self::from_kind(ObjectKind::Point)
    }

    pub fn custom(mask: Mask) -> Self {
        Self::from_kind(ObjectKind::CustomMask(mask))
    }

    fn from_kind(kind: ObjectKind) -> Self {
        Self {
            kind,
            center: (0.0, 0.0),
            height: None,
        }
    }

    pub fn with_center(mut self, x: f64, y: f64) -> Self {
        self.center = (x, y);
        self
    }

    pub fn with_height(mut self, height: f64) -> Result<Self> {
        positive("object_height", height)?;
        self.height = Some(height);
        Ok(self)
    }

    pub fn kind(&self) -> &ObjectKind {
        &self.kind
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Feature centers along x: slit or bar centers, the point itself, or
    /// nothing for custom masks.
    pub fn feature_centers(&self) -> Vec<f64> {
        let cx = self.center.0;
        match &self.kind {
            ObjectKind::SingleSlit { .. } | ObjectKind::Point => vec![cx],
            ObjectKind::DoubleSlit { separation, .. } => {
                vec![cx - 0.5 * separation, cx + 0.5 * separation]
            }
            ObjectKind::TripleSlit { separation, .. } => {
                vec![cx - separation, cx, cx + separation]
            }
            ObjectKind::BarChart { bar_width, bars } => (0..*bars)
                .map(|i| cx + (i as f64 - 0.5 * (*bars - 1) as f64) * 2.0 * bar_width)
                .collect(),
            ObjectKind::CustomMask(_) => Vec::new(),
        }
    }

    /// Width of each open feature along x (`None` for a point or mask).
    fn feature_width(&self) -> Option<f64> {
        match &self.kind {
            ObjectKind::SingleSlit { width }
            | ObjectKind::DoubleSlit { width, .. }
            | ObjectKind::TripleSlit { width, .. } => Some(*width),
            ObjectKind::BarChart { bar_width, .. } => Some(*bar_width),
            ObjectKind::Point | ObjectKind::CustomMask(_) => None,
        }
    }

    /// Smallest detail `d`: the narrowest open or opaque feature. A point
    /// object has none.
    pub fn smallest_detail(&self) -> Option<f64> {
        match &self.kind {
            ObjectKind::SingleSlit { width } => Some(*width),
            ObjectKind::DoubleSlit { width, separation } | ObjectKind::TripleSlit { width, separation } => {
                Some(width.min(separation - width))
            }
            ObjectKind::BarChart { bar_width, .. } => Some(*bar_width),
            ObjectKind::Point => None,
            ObjectKind::CustomMask(m) => m.smallest_feature(),
        }
    }

    fn effective_height(&self) -> Option<f64> {
        match (&self.kind, self.height) {
            (_, Some(h)) => Some(h),
            (ObjectKind::BarChart { bar_width, .. }, None) => Some(5.0 * bar_width),
            _ => None,
        }
    }

    /// Bounding box `[(x_min, x_max), (y_min, y_max)]` of the open region;
    /// an unbounded y range is reported as `None`.
    pub fn support(&self) -> ((f64, f64), Option<(f64, f64)>) {
        let (cx, cy) = self.center;
        let x = match (&self.kind, self.feature_width()) {
            (ObjectKind::CustomMask(m), _) => (cx - m.half_x(), cx + m.half_x()),
            (_, Some(w)) => {
                let c = self.feature_centers();
                (c[0] - 0.5 * w, c[c.len() - 1] + 0.5 * w)
            }
            _ => (cx, cx),
        };
        let y = match &self.kind {
            ObjectKind::CustomMask(m) => Some((cy - m.half_y(), cy + m.half_y())),
            ObjectKind::Point => Some((cy, cy)),
            _ => self.effective_height().map(|h| (cy - 0.5 * h, cy + 0.5 * h)),
        };
        (x, y)
    }

    /// Continuous transmission at `(x, y)`; `y` is ignored in 1-D use
    /// (pass `None`). Points have no continuous form and return 0.
    pub fn transmission_at(&self, x: f64, y: Option<f64>) -> f64 {
        let (cx, cy) = self.center;
        if let ObjectKind::CustomMask(m) = &self.kind {
            return m.value_at(x - cx, y.map_or(0.0, |y| y - cy));
        }
        let Some(w) = self.feature_width() else {
            return 0.0;
        };
        if let (Some(y), Some(h)) = (y, self.effective_height()) {
            if (y - cy).abs() > 0.5 * h * (1.0 + EDGE_TOL) {
                return 0.0;
            }
        }
        let half = 0.5 * w * (1.0 + EDGE_TOL);
        if self.feature_centers().iter().any(|c| (x - c).abs() <= half) {
            1.0
        } else {
            0.0
        }
    }
}

/// Relative slack so that samples landing exactly on an edge are treated
/// symmetrically despite rounding.
const EDGE_TOL: f64 = 1e-9;

/// Samples `A(ρo)` on `grid`. Rejects grids that do not cover the object or
/// whose step exceeds `d/8`.
pub fn sample_object_aperture(object: &ObjectModel, grid: &Grid) -> Result<ComplexField> {
    check_object_grid(object, grid)?;
    let (cx, cy) = object.center();
    let values = match (object.kind(), grid) {
        (ObjectKind::Point, Grid::One(g)) => {
            let mut v = vec![0.0; g.n()];
            v[point_index(g, cx, "point object")?] = 1.0;
            v
        }
        (ObjectKind::Point, Grid::Two(g)) => {
            let mut v = vec![0.0; g.len()];
            let ix = point_index(&g.x, cx, "point object")?;
            let iy = point_index(&g.y, cy, "point object")?;
            v[g.index(ix, iy)] = 1.0;
            v
        }
        (_, Grid::One(g)) => g.coords().map(|x| object.transmission_at(x, None)).collect(),
        (_, Grid::Two(_)) => grid
            .positions()
            .map(|(x, y)| object.transmission_at(x, Some(y)))
            .collect(),
    };
    ComplexField::new(
        *grid,
        values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
}

/// Coverage and resolution requirements on an object-plane grid; returns a
/// description of the first failure.
pub(crate) fn object_grid_problem(object: &ObjectModel, grid: &Grid) -> Option<String> {
    let ((x0, x1), y) = object.support();
    let covers = |axis: &Grid1D, lo: f64, hi: f64| {
        let slack = 0.5 * axis.step();
        axis.first() - slack <= lo && axis.last() + slack >= hi
    };
    let axes = grid.axes();
    if !covers(&axes[0], x0, x1) {
        return Some(format!(
            "x range [{:.4e}, {:.4e}] m does not cover the object [{x0:.4e}, {x1:.4e}] m",
            axes[0].first(),
            axes[0].last()
        ));
    }
    if let (Some(ay), Some((y0, y1))) = (axes.get(1), y) {
        if !covers(ay, y0, y1) {
            return Some(format!(
                "y range [{:.4e}, {:.4e}] m does not cover the object [{y0:.4e}, {y1:.4e}] m",
                ay.first(),
                ay.last()
            ));
        }
    }
    if let Some(d) = object.smallest_detail() {
        let step = axes.iter().map(|a| a.step()).fold(0.0, f64::max);
        if step > d / 8.0 * (1.0 + EDGE_TOL) {
            return Some(format!(
                "step {step:.4e} m does not resolve the smallest detail {d:.4e} m (need <= d/8)"
            ));
        }
    }
    None
}

fn check_object_grid(object: &ObjectModel, grid: &Grid) -> Result<()> {
    match object_grid_problem(object, grid) {
        Some(p) => Err(invalid("object grid", p)),
        None => Ok(()),
    }
}

/// Smallest interior open/opaque run of a sampled 1-D aperture (x axis of a
/// 2-D one), measured in samples times step.
pub fn realized_detail(aperture: &ComplexField) -> Option<f64> {
    let grid = aperture.grid();
    let gx = grid.x();
    let open: Vec<f64> = aperture
        .values()
        .iter()
        .map(|v| (v.norm() > 0.5) as u8 as f64)
        .collect();
    open.chunks(gx.n())
        .filter_map(|row| shortest_interior_run(row, gx.step()))
        .reduce(f64::min)
}
