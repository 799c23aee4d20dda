use std::fmt::Write as _;

use super::budget::{
    diffraction_limits, geometrical_optics_parameter, refocus_range, AlphaReading, DofReport, PixelBudget,
};
use super::metrics::ImageMetrics;
use crate::error::Result;
use crate::scene::OpticalSetup;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub value: f64,
    pub unit: &'static str,
    pub formula: &'static str,
}

/// Metric table written as CSV with columns `name,value,unit,formula_ref`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

impl MetricsReport {
    pub fn push(&mut self, name: impl Into<String>, value: f64, unit: &'static str, formula: &'static str) {
        self.rows.push(ReportRow {
            name: name.into(),
            value,
            unit,
            formula,
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.name == name).map(|r| r.value)
    }

    /// Appends the metrics of one image, prefixing every row name.
    pub fn push_image(&mut self, prefix: &str, m: &ImageMetrics) {
        self.push(
            format!("{prefix}_psf_sigma"),
            m.psf_sigma,
            "m",
            "second moment of the main peak",
        );
        if let Some(v) = m.visibility {
            self.push(
                format!("{prefix}_visibility"),
                v,
                "1",
                "(peak - dip)/(peak + dip)",
            );
        }
        if let Some(v) = m.ncc {
            self.push(
                format!("{prefix}_ncc"),
                v,
                "1",
                "mean-removed normalized cross-correlation",
            );
        }
        self.push(
            format!("{prefix}_centroid_x"),
            m.centroid.0,
            "m",
            "intensity-weighted mean",
        );
        self.push(format!("{prefix}_peak_x"), m.peak_position, "m", "argmax");
    }

    /// Values use the shortest round-trip representation, so equal inputs
    /// give equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value,unit,formula_ref\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                field(&r.name),
                r.value,
                r.unit,
                field(r.formula)
            );
        }
        out
    }
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Diffraction scales, geometrical-optics parameter, refocus bounds under
/// both α readings, and the DOF gain.
pub fn analysis_report(setup: &OpticalSetup, budget: &PixelBudget) -> Result<MetricsReport> {
    let mut r = MetricsReport::default();
    let limits = diffraction_limits(setup);
    if let Some(v) = limits.spatial {
        r.push("diffraction_limit_a", v, "m", "lambda z_a / D_s");
    }
    if let Some(v) = limits.angular_over_m {
        r.push("diffraction_limit_b_over_m", v, "m", "lambda z_b / d");
    }
    if let Some(v) = geometrical_optics_parameter(setup) {
        r.push("geometrical_optics_parameter", v, "1", "lambda z_a / (d D_s)");
    }
    let dof = DofReport::new(budget, setup.source.width(), setup.magnification)?;
    r.push("n_tot", budget.n_tot() as f64, "px", "N_tot");
    r.push("n_u_pi", budget.pi().1 as f64, "px", "N_tot / N_x(p)");
    r.push("n_u_cpi", budget.cpi().1 as f64, "px", "N_tot - N_x(cp)");
    r.push("ratio_pi", dof.ratio_pi, "1", "(delta / D_s) N_u(p)^2");
    r.push("ratio_cpi", dof.ratio_cpi, "1", "(delta / D_s) N_u(cp)");
    r.push("dof_gain", dof.dof_gain, "1", "N_u(cp) / N_u(p)^2");
    for (tag, reading) in [
        ("zb_over_za", AlphaReading::ObjectOverDetector),
        ("za_over_zb", AlphaReading::DetectorOverObject),
    ] {
        let (lo, hi) = refocus_range(setup.z_a, dof.alpha_bound_cpi, reading);
        r.push(
            format!("cpi_refocus_z_min_{tag}"),
            lo,
            "m",
            "|1 - 1/alpha| < ratio_cpi",
        );
        r.push(
            format!("cpi_refocus_z_max_{tag}"),
            hi.unwrap_or(f64::INFINITY),
            "m",
            "|1 - 1/alpha| < ratio_cpi",
        );
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_formats() {
        let mut r = MetricsReport::default();
        r.push("dof_gain", 37.5, "1", "N_u(cp) / N_u(p)^2");
        r.push("x", 2.0e-6, "m", "a, b");
        assert_eq!(
            r.to_csv(),
            "name,value,unit,formula_ref\ndof_gain,37.5,1,N_u(cp) / N_u(p)^2\nx,0.000002,m,\"a, b\"\n"
        );
        assert_eq!(r.get("dof_gain"), Some(37.5));
    }
}
