use super::object::{object_grid_problem, ObjectModel};
use super::source::{SourceKind, SourceModel};
use crate::error::{invalid, CpiError, Result, Violation};
use crate::optics::{max_step_for_slope, Grid, Grid1D, Grid2D, Wavenumber};

/// Fraction of each sampling bound used when grids are planned automatically.
const PLAN_SAFETY: f64 = 0.8;
/// Planned source grids span `±SOURCE_HALF_WIDTH * D_s` around the center.
const SOURCE_HALF_WIDTH: f64 = 1.5;
/// Source profile resolution: step at most `D_s / SOURCE_STEPS_PER_WIDTH`.
const SOURCE_STEPS_PER_WIDTH: f64 = 30.0;

/// Complete geometry of one correlation plenoptic experiment.
///
/// `grid_a` is the spatial detector D_a (pixel δ, `N_x` pixels per axis),
/// `grid_b` the angular detector D_b (`N_u` pixels per axis); `grid_s` and
/// `grid_o` are the integration grids on the source and object planes.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalSetup {
    pub wavenumber: Wavenumber,
    pub z_a: f64,
    pub z_b: f64,
    pub magnification: f64,
    pub source: SourceModel,
    pub object: ObjectModel,
    pub grid_a: Grid,
    pub grid_b: Grid,
    pub grid_s: Grid,
    pub grid_o: Grid,
    /// Declared sensor budget `N_tot` (pixels per axis shared by D_a and D_b).
    pub n_tot: Option<usize>,
    pub seed: u64,
}

impl OpticalSetup {
    pub fn builder(
        lambda: f64,
        z_a: f64,
        z_b: f64,
        magnification: f64,
        source: SourceModel,
        object: ObjectModel,
    ) -> SetupBuilder {
        SetupBuilder {
            lambda,
            z_a,
            z_b,
            magnification,
            source,
            object,
            grid_a: None,
            grid_b: None,
            grid_s: None,
            grid_o: None,
            n_tot: None,
            seed: 0,
        }
    }

    pub fn dims(&self) -> usize {
        self.grid_a.dims()
    }

    pub fn lambda(&self) -> f64 {
        self.wavenumber.lambda()
    }

    pub fn k(&self) -> f64 {
        self.wavenumber.k()
    }

    /// Chirp curvature `k (1/z_b − 1/z_a)` carried by the source plane.
    pub fn curvature(&self) -> f64 {
        self.k() * (1.0 / self.z_b - 1.0 / self.z_a)
    }

    pub fn is_focused(&self) -> bool {
        self.z_a == self.z_b
    }

    /// Same setup with the object moved to `z_b`, keeping all grids.
    pub fn with_z_b(&self, z_b: f64) -> Result<Self> {
        positive_length("z_b", z_b)?;
        Ok(Self { z_b, ..self.clone() })
    }

    /// Same setup re-planned for a different object distance: the source
    /// and object integration grids are derived again.
    pub fn replanned_for(&self, z_b: f64) -> Result<Self> {
        let mut b = Self::builder(
            self.lambda(),
            self.z_a,
            z_b,
            self.magnification,
            self.source,
            self.object.clone(),
        )
        .detectors(self.grid_a, self.grid_b)
        .seed(self.seed);
        if let Some(n) = self.n_tot {
            b = b.pixel_budget(n);
        }
        b.build()
    }

    /// Rejects the setup unless `validate_setup` reports no violation.
    pub fn check(&self) -> Result<()> {
        let report = validate_setup(self);
        if report.accepted() {
            Ok(())
        } else {
            Err(CpiError::SetupRejected(report.violations))
        }
    }

    /// Largest `|ρo/z_b − ρa/z_a|` over the object and D_a grids, per axis.
    fn max_direction(&self, grid_o: &Grid, axis: usize) -> f64 {
        let o = grid_o.axes()[axis];
        let a = self.grid_a.axes()[axis];
        let mut m: f64 = 0.0;
        for xo in [o.first(), o.last()] {
            for xa in [a.first(), a.last()] {
                m = m.max((xo / self.z_b - xa / self.z_a).abs());
            }
        }
        m
    }

    /// Source-plane step bound along one axis: the inner integrand carries
    /// the chirp (slope `|c| R_s`) times a plane wave (slope `κ_max`).
    fn source_step_bound(&self, grid_s: &Grid, grid_o: &Grid, axis: usize) -> f64 {
        let r_s = grid_s.axes()[axis].max_abs();
        let kappa = self.k() * self.max_direction(grid_o, axis);
        max_step_for_slope(self.curvature().abs() * r_s + kappa)
    }

    /// Object-plane step bound along one axis: phase slope
    /// `k (R_b/M + R_s) / z_b` of the outer integrand.
    fn object_step_bound(&self, grid_s: &Grid, axis: usize) -> f64 {
        let r_b = self.grid_b.axes()[axis].max_abs();
        let r_s = grid_s.axes()[axis].max_abs();
        max_step_for_slope(self.k() * (r_b / self.magnification + r_s) / self.z_b)
    }
}

fn positive_length(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("positive length required, got {v}")))
    }
}

/// Builds an [`OpticalSetup`], planning any integration grid that was not
/// given explicitly.
#[derive(Debug, Clone)]
pub struct SetupBuilder {
    lambda: f64,
    z_a: f64,
    z_b: f64,
    magnification: f64,
    source: SourceModel,
    object: ObjectModel,
    grid_a: Option<Grid>,
    grid_b: Option<Grid>,
    grid_s: Option<Grid>,
    grid_o: Option<Grid>,
    n_tot: Option<usize>,
    seed: u64,
}

impl SetupBuilder {
    pub fn detectors(mut self, grid_a: impl Into<Grid>, grid_b: impl Into<Grid>) -> Self {
        self.grid_a = Some(grid_a.into());
        self.grid_b = Some(grid_b.into());
        self
    }

    /// Square 1-D (or 2-D with `dims = 2`) detectors with pixel `pitch`,
    /// `n_x` pixels on D_a and `n_u` on D_b, both centered on the axis.
    pub fn pixel_detectors(self, dims: usize, pitch: f64, n_x: usize, n_u: usize) -> Result<Self> {
        let a = Grid1D::new(n_x, pitch, 0.0)?;
        let b = Grid1D::new(n_u, pitch, 0.0)?;
        Ok(if dims == 2 {
            self.detectors(Grid2D::square(a), Grid2D::square(b))
        } else {
            self.detectors(a, b)
        })
    }

    pub fn source_grid(mut self, grid: impl Into<Grid>) -> Self {
        self.grid_s = Some(grid.into());
        self
    }

    pub fn object_grid(mut self, grid: impl Into<Grid>) -> Self {
        self.grid_o = Some(grid.into());
        self
    }

    pub fn pixel_budget(mut self, n_tot: usize) -> Self {
        self.n_tot = Some(n_tot);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Assembles the setup without validating it against the sampling rules.
    pub fn build_unchecked(self) -> Result<OpticalSetup> {
        let wavenumber = Wavenumber::from_wavelength(self.lambda)?;
        positive_length("z_a", self.z_a)?;
        positive_length("z_b", self.z_b)?;
        if !(self.magnification.is_finite() && self.magnification > 0.0) {
            return Err(invalid(
                "magnification",
                format!("must be positive, got {}", self.magnification),
            ));
        }
        let (grid_a, grid_b) = match (self.grid_a, self.grid_b) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(invalid("detectors", "D_a and D_b grids are required")),
        };
        if grid_a.dims() != grid_b.dims() {
            return Err(CpiError::Dimension(
                "D_a and D_b must have the same dimension".into(),
            ));
        }
        let mut setup = OpticalSetup {
            wavenumber,
            z_a: self.z_a,
            z_b: self.z_b,
            magnification: self.magnification,
            source: self.source,
            object: self.object,
            grid_a,
            grid_b,
            // Placeholders, replaced below.
            grid_s: grid_a,
            grid_o: grid_a,
            n_tot: self.n_tot,
            seed: self.seed,
        };
        setup.grid_o = match self.grid_o {
            Some(g) => g,
            None => plan_object_extent(&setup)?,
        };
        setup.grid_s = match self.grid_s {
            Some(g) => g,
            None => plan_source_grid(&setup)?,
        };
        if self.grid_o.is_none() {
            setup.grid_o = plan_object_grid(&setup)?;
        }
        for (name, g) in [("source", &setup.grid_s), ("object", &setup.grid_o)] {
            if g.dims() != grid_a.dims() {
                return Err(CpiError::Dimension(format!(
                    "{name} grid is {}-D but the detectors are {}-D",
                    g.dims(),
                    grid_a.dims()
                )));
            }
        }
        Ok(setup)
    }

    /// Assembles and validates the setup.
    pub fn build(self) -> Result<OpticalSetup> {
        let setup = self.build_unchecked()?;
        setup.check()?;
        Ok(setup)
    }
}

fn axis_centers(center: (f64, f64), dims: usize) -> Vec<f64> {
    if dims == 2 {
        vec![center.0, center.1]
    } else {
        vec![center.0]
    }
}

fn assemble(axes: Vec<Grid1D>) -> Grid {
    if axes.len() == 2 {
        Grid::Two(Grid2D::new(axes[0], axes[1]))
    } else {
        Grid::One(axes[0])
    }
}

/// Object bounding box per axis with a margin; unbounded y extents are cut
/// to the x extent.
fn object_box(object: &ObjectModel, dims: usize) -> Vec<(f64, f64)> {
    let ((x0, x1), y) = object.support();
    let mut boxes = vec![(x0, x1)];
    if dims == 2 {
        let (cy, half_x) = (object.center().1, 0.5 * (x1 - x0));
        boxes.push(y.unwrap_or((cy - half_x, cy + half_x)));
    }
    boxes
}

fn object_step_target(object: &ObjectModel) -> f64 {
    match object.smallest_detail() {
        Some(d) => d / 8.0,
        None => f64::INFINITY,
    }
}

fn object_axes(object: &ObjectModel, dims: usize, steps: &[f64]) -> Result<Vec<Grid1D>> {
    object_box(object, dims)
        .into_iter()
        .zip(steps)
        .map(|((lo, hi), &step)| {
            let center = 0.5 * (lo + hi);
            Grid1D::covering((0.5 * (hi - lo)).max(step) + step, step, center)
        })
        .collect()
}

/// Provisional object grid with the final extent, used to bound κ on the
/// source plane before the object step is known.
fn plan_object_extent(setup: &OpticalSetup) -> Result<Grid> {
    let dims = setup.dims();
    let boxes = object_box(&setup.object, dims);
    let steps: Vec<f64> = boxes
        .iter()
        .map(|(lo, hi)| {
            ((hi - lo) / 64.0)
                .min(object_step_target(&setup.object))
                .max(1e-9)
        })
        .collect();
    Ok(assemble(object_axes(&setup.object, dims, &steps)?))
}

fn plan_object_grid(setup: &OpticalSetup) -> Result<Grid> {
    let dims = setup.dims();
    let steps: Vec<f64> = (0..dims)
        .map(|axis| {
            let bound = PLAN_SAFETY * setup.object_step_bound(&setup.grid_s, axis);
            let (lo, hi) = object_box(&setup.object, dims)[axis];
            let mut step = object_step_target(&setup.object).min(bound);
            if !step.is_finite() {
                step = ((hi - lo) / 16.0).max(1e-7);
            }
            step
        })
        .collect();
    Ok(assemble(object_axes(&setup.object, dims, &steps)?))
}

fn plan_source_grid(setup: &OpticalSetup) -> Result<Grid> {
    let dims = setup.dims();
    let centers = axis_centers(setup.source.center(), dims);
    let ds = setup.source.width();
    let axes = (0..dims)
        .map(|axis| {
            let c = centers[axis];
            if matches!(setup.source.kind(), SourceKind::Point) {
                // Only the emitting sample matters; a fine lattice keeps the
                // point exactly on a sample for any micrometre-scale center.
                let step = 1e-6;
                let n = (c.abs() / step).round() as usize;
                return Grid1D::new(2 * n + 5, step, 0.0);
            }
            let half = SOURCE_HALF_WIDTH * ds;
            let r_s = c.abs() + half;
            let kappa = setup.k() * setup.max_direction(&setup.grid_o, axis);
            let bound = max_step_for_slope(setup.curvature().abs() * r_s + kappa);
            let step = (ds / SOURCE_STEPS_PER_WIDTH).min(PLAN_SAFETY * bound);
            Grid1D::covering(half, step, c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(axes))
}

/// Outcome of one sampling-rule check on one plane and axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCheck {
    pub plane: String,
    pub step: f64,
    pub max_step: f64,
}

impl PlaneCheck {
    pub fn ok(&self) -> bool {
        self.step < self.max_step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCheck {
    pub n_x: usize,
    pub n_u: usize,
    pub n_tot: usize,
}

impl BudgetCheck {
    pub fn ok(&self) -> bool {
        self.n_x + self.n_u <= self.n_tot
    }
}

/// Diagnostics of [`validate_setup`].
#[derive(Debug, Clone, PartialEq)]
pub struct SetupReport {
    pub budget: Option<BudgetCheck>,
    pub sampling: Vec<PlaneCheck>,
    /// Step required by the source chirp alone, `π/(|c| R_s)` (x axis).
    pub chirp_only_step: f64,
    /// `λ z_a / (d D_s)`, absent for point objects or point sources.
    pub geometrical_optics_parameter: Option<f64>,
    pub violations: Vec<Violation>,
}

impl SetupReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks pixel budget, grid coverage and every sampling rule; the setup is
/// accepted iff the violation list is empty.
pub fn validate_setup(setup: &OpticalSetup) -> SetupReport {
    let mut violations = Vec::new();
    let dims = setup.dims();
    for (name, g) in [
        ("D_b", &setup.grid_b),
        ("source grid", &setup.grid_s),
        ("object grid", &setup.grid_o),
    ] {
        if g.dims() != dims {
            violations.push(Violation::new(
                name,
                format!("{}-D grid in a {dims}-D setup", g.dims()),
            ));
        }
    }
    if !violations.is_empty() {
        return SetupReport {
            budget: None,
            sampling: Vec::new(),
            chirp_only_step: f64::NAN,
            geometrical_optics_parameter: None,
            violations,
        };
    }

    let budget = setup.n_tot.map(|n_tot| BudgetCheck {
        n_x: setup.grid_a.x().n(),
        n_u: setup.grid_b.x().n(),
        n_tot,
    });
    if let Some(b) = &budget {
        if !b.ok() {
            violations.push(Violation::new(
                "pixel budget",
                format!("N_x + N_u = {} + {} exceeds N_tot = {}", b.n_x, b.n_u, b.n_tot),
            ));
        }
    }

    let ds = setup.source.width();
    let point_source = matches!(setup.source.kind(), SourceKind::Point);
    let axis_name = |axis: usize| if axis == 0 { "x" } else { "y" };
    let mut sampling = Vec::new();
    for axis in 0..dims {
        let s_axis = setup.grid_s.axes()[axis];
        if !point_source {
            if s_axis.extent() < 2.0 * ds {
                violations.push(Violation::new(
                    "source grid",
                    format!(
                        "{} extent {:.4e} m is below 2 D_s = {:.4e} m",
                        axis_name(axis),
                        s_axis.extent(),
                        2.0 * ds
                    ),
                ));
            }
            let resolve = ds / SOURCE_STEPS_PER_WIDTH;
            if s_axis.step() > resolve * (1.0 + 1e-9) {
                violations.push(Violation::new(
                    "source grid",
                    format!(
                        "{} step {:.4e} m does not resolve the profile (need <= D_s/30 = {resolve:.4e} m)",
                        axis_name(axis),
                        s_axis.step()
                    ),
                ));
            }
            sampling.push(PlaneCheck {
                plane: format!("source plane ({})", axis_name(axis)),
                step: s_axis.step(),
                max_step: setup.source_step_bound(&setup.grid_s, &setup.grid_o, axis),
            });
        }
        sampling.push(PlaneCheck {
            plane: format!("object plane ({})", axis_name(axis)),
            step: setup.grid_o.axes()[axis].step(),
            max_step: setup.object_step_bound(&setup.grid_s, axis),
        });
    }
    for check in &sampling {
        if !check.ok() {
            violations.push(Violation::new(
                "sampling rule",
                format!(
                    "{}: step {:.4e} m must stay below {:.4e} m",
                    check.plane, check.step, check.max_step
                ),
            ));
        }
    }
    if let Some(p) = object_grid_problem(&setup.object, &setup.grid_o) {
        violations.push(Violation::new("object grid", p));
    }
    let (cx, cy) = setup.source.center();
    if point_source {
        let axes = setup.grid_s.axes();
        let inside = axes[0].nearest(cx).is_some() && axes.get(1).is_none_or(|a| a.nearest(cy).is_some());
        if !inside {
            violations.push(Violation::new(
                "source grid",
                "point source lies outside the grid",
            ));
        }
    }

    let chirp_only_step = if point_source {
        f64::INFINITY
    } else {
        crate::optics::chirp_max_step(setup.curvature(), setup.grid_s.x().max_abs())
    };
    SetupReport {
        budget,
        sampling,
        chirp_only_step,
        geometrical_optics_parameter: crate::analysis::geometrical_optics_parameter(setup),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(z_b: f64) -> SetupBuilder {
        OpticalSetup::builder(
            500e-9,
            10e-3,
            z_b,
            0.8,
            SourceModel::gaussian(0.6e-3).unwrap(),
            ObjectModel::double_slit(100e-6, 400e-6).unwrap(),
        )
        .pixel_detectors(1, 32e-6, 150, 150)
        .unwrap()
        .pixel_budget(300)
    }

    #[test]
    fn demo_setup_is_accepted_at_both_distances() {
        for z_b in [10e-3, 50e-3] {
            let setup = demo(z_b).build().unwrap();
            let report = validate_setup(&setup);
            assert!(report.accepted(), "{:?}", report.violations);
            assert!(report.budget.unwrap().ok());
            let p = report.geometrical_optics_parameter.unwrap();
            assert!((p - 0.0278).abs() < 1e-4);
        }
    }

    #[test]
    fn budget_overrun_is_a_violation() {
        let setup = demo(10e-3).pixel_budget(299).build_unchecked().unwrap();
        let report = validate_setup(&setup);
        assert!(!report.accepted());
        assert!(report.violations.iter().any(|v| v.what == "pixel budget"));
        assert!(matches!(setup.check(), Err(CpiError::SetupRejected(_))));
    }

    #[test]
    fn coarse_source_grid_violates_chirp_rule() {
        let coarse = Grid1D::covering(2.7e-3, 10e-6, 0.0).unwrap();
        let setup = demo(50e-3).source_grid(coarse).build_unchecked().unwrap();
        let report = validate_setup(&setup);
        assert!(report.violations.iter().any(|v| v.what == "sampling rule"));
        // chirp term alone: π / (k |1/z_b − 1/z_a| R), R = 2.7 mm
        assert!((report.chirp_only_step - 1.1574e-6).abs() < 1e-9);
        let s = &report.sampling[0];
        assert!(!s.ok() && s.max_step < report.chirp_only_step);
    }

    #[test]
    fn refined_integration_grids_stay_accepted() {
        let setup = demo(50e-3).build().unwrap();
        let finer = OpticalSetup {
            grid_s: setup.grid_s.refined(2).unwrap(),
            grid_o: setup.grid_o.refined(2).unwrap(),
            ..setup.clone()
        };
        assert!(validate_setup(&finer).accepted());
    }

    #[test]
    fn rejects_nonphysical_parameters() {
        let b = |lambda: f64, z_a: f64, m: f64| {
            OpticalSetup::builder(lambda, z_a, 10e-3, m, SourceModel::point(), ObjectModel::point())
                .pixel_detectors(1, 1e-6, 8, 8)
                .unwrap()
                .build_unchecked()
        };
        assert!(b(-5e-7, 10e-3, 0.8).is_err());
        assert!(b(5e-7, -1e-3, 0.8).is_err());
        assert!(b(5e-7, 10e-3, 0.0).is_err());
        assert!(b(5e-7, 10e-3, 0.8).is_ok());
    }
}
