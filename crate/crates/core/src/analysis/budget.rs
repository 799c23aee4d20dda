use crate::error::{invalid, Result};
use crate::scene::{OpticalSetup, SourceKind, SourceModel};

/// Sensor pixel budget of a standard plenoptic (PI) device and a correlation
/// plenoptic (CPI) device built from the same `N_tot` pixels per axis.
///
/// PI splits the sensor multiplicatively (`N_x N_u = N_tot`), CPI additively
/// over its two detectors (`N_x + N_u = N_tot`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBudget {
    n_tot: usize,
    pixel: f64,
    pi: (usize, usize),
    cpi: (usize, usize),
}

impl PixelBudget {
    pub fn new(n_tot: usize, pixel: f64, pi: (usize, usize), cpi: (usize, usize)) -> Result<Self> {
        if !(pixel.is_finite() && pixel > 0.0) {
            return Err(invalid("pixel", format!("positive length required, got {pixel}")));
        }
        if pi.0 == 0 || pi.1 == 0 || cpi.0 == 0 || cpi.1 == 0 {
            return Err(invalid("pixel budget", "pixel counts must be positive"));
        }
        if pi.0 * pi.1 != n_tot {
            return Err(invalid(
                "pixel budget",
                format!("PI split {} x {} does not use N_tot = {n_tot}", pi.0, pi.1),
            ));
        }
        if cpi.0 + cpi.1 != n_tot {
            return Err(invalid(
                "pixel budget",
                format!("CPI split {} + {} does not use N_tot = {n_tot}", cpi.0, cpi.1),
            ));
        }
        Ok(Self {
            n_tot,
            pixel,
            pi,
            cpi,
        })
    }

    /// Derives both splits from the spatial resolutions `N_x^(p)` and `N_x^(cp)`.
    pub fn from_spatial(n_tot: usize, pixel: f64, n_x_pi: usize, n_x_cpi: usize) -> Result<Self> {
        if n_x_pi == 0 || !n_tot.is_multiple_of(n_x_pi) {
            return Err(invalid(
                "n_x_pi",
                format!("{n_x_pi} does not divide N_tot = {n_tot}"),
            ));
        }
        if n_x_cpi >= n_tot {
            return Err(invalid(
                "n_x",
                format!("{n_x_cpi} leaves no angular pixels out of N_tot = {n_tot}"),
            ));
        }
        Self::new(n_tot, pixel, (n_x_pi, n_tot / n_x_pi), (n_x_cpi, n_tot - n_x_cpi))
    }

    pub fn n_tot(&self) -> usize {
        self.n_tot
    }

    pub fn pixel(&self) -> f64 {
        self.pixel
    }

    /// `(N_x, N_u)` of the PI device.
    pub fn pi(&self) -> (usize, usize) {
        self.pi
    }

    /// `(N_x, N_u)` of the CPI device.
    pub fn cpi(&self) -> (usize, usize) {
        self.cpi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Pi,
    Cpi,
}

/// Bound `Δx/Δu` on `|1 − 1/α|` below which refocusing is perfect:
/// `(δ/D_s) N_u²` for PI and `(δ/D_s) N_u` for CPI.
pub fn perfect_refocus_bound(budget: &PixelBudget, d_s: f64, system: System) -> f64 {
    let base = budget.pixel() / d_s;
    match system {
        System::Pi => base * (budget.pi().1 as f64).powi(2),
        System::Cpi => base * budget.cpi().1 as f64,
    }
}

/// Depth-of-field ratio CPI/PI, `N_u^(cp) / (N_u^(p))²`.
pub fn dof_gain(budget: &PixelBudget) -> f64 {
    budget.cpi().1 as f64 / (budget.pi().1 as f64).powi(2)
}

/// How the refocusing ratio α maps onto the CPI distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaReading {
    /// α = z_b / z_a
    ObjectOverDetector,
    /// α = z_a / z_b
    DetectorOverObject,
}

/// Range of object distances `(z_min, z_max)` with `|1 − 1/α| < bound` under
/// the given reading; `z_max = None` means unbounded.
pub fn refocus_range(z_a: f64, bound: f64, reading: AlphaReading) -> (f64, Option<f64>) {
    match reading {
        AlphaReading::ObjectOverDetector => {
            let z_max = (bound < 1.0).then(|| z_a / (1.0 - bound));
            (z_a / (1.0 + bound), z_max)
        }
        AlphaReading::DetectorOverObject => ((z_a * (1.0 - bound)).max(0.0), Some(z_a * (1.0 + bound))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofReport {
    pub ratio_pi: f64,
    pub ratio_cpi: f64,
    /// Bounds on `|1 − 1/α|`; numerically equal to the resolution ratios.
    pub alpha_bound_pi: f64,
    pub alpha_bound_cpi: f64,
    pub dof_gain: f64,
    pub d_s: f64,
    pub pixel: f64,
    pub magnification: f64,
}

impl DofReport {
    pub fn new(budget: &PixelBudget, d_s: f64, magnification: f64) -> Result<Self> {
        if !(d_s.is_finite() && d_s > 0.0) {
            return Err(invalid(
                "D_s",
                format!("positive source width required, got {d_s}"),
            ));
        }
        let ratio_pi = perfect_refocus_bound(budget, d_s, System::Pi);
        let ratio_cpi = perfect_refocus_bound(budget, d_s, System::Cpi);
        Ok(Self {
            ratio_pi,
            ratio_cpi,
            alpha_bound_pi: ratio_pi,
            alpha_bound_cpi: ratio_cpi,
            dof_gain: dof_gain(budget),
            d_s,
            pixel: budget.pixel(),
            magnification,
        })
    }
}

/// Order-of-magnitude diffraction scales: spatial `λ z_a / D_s` on D_a and
/// angular `λ z_b / d` on D_b (divided by M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffractionLimits {
    pub spatial: Option<f64>,
    pub angular_over_m: Option<f64>,
}

pub fn diffraction_limits_from(
    lambda: f64,
    z_a: f64,
    z_b: f64,
    d_s: f64,
    d: Option<f64>,
) -> DiffractionLimits {
    DiffractionLimits {
        spatial: (d_s > 0.0).then(|| lambda * z_a / d_s),
        angular_over_m: d.map(|d| lambda * z_b / d),
    }
}

pub fn diffraction_limits(setup: &OpticalSetup) -> DiffractionLimits {
    diffraction_limits_from(
        setup.lambda(),
        setup.z_a,
        setup.z_b,
        setup.source.width(),
        setup.object.smallest_detail(),
    )
}

/// `λ z_a / (d D_s)`; refocusing becomes exact as it goes to zero.
pub fn geometrical_optics_parameter_from(lambda: f64, z_a: f64, d: f64, d_s: f64) -> f64 {
    lambda * z_a / (d * d_s)
}

/// `None` for point objects and point sources, where `d` or `D_s` vanishes.
pub fn geometrical_optics_parameter(setup: &OpticalSetup) -> Option<f64> {
    let d_s = setup.source.width();
    let d = setup.object.smallest_detail()?;
    (d_s > 0.0).then(|| geometrical_optics_parameter_from(setup.lambda(), setup.z_a, d, d_s))
}

/// Standard deviation of the focused ghost-image PSF for a Gaussian source
/// of rms radius `sigma`: the point image is `|F̃(k(ρo − ρa)/z_b)|²`, a
/// Gaussian of std `z_b / (√2 k σ)`. `None` for other source shapes.
pub fn ghost_psf_sigma(lambda: f64, z_b: f64, source: &SourceModel) -> Option<f64> {
    match source.kind() {
        SourceKind::Gaussian { sigma } => {
            Some(z_b * lambda / (2.0 * std::f64::consts::PI * std::f64::consts::SQRT_2 * sigma))
        }
        _ => None,
    }
}
