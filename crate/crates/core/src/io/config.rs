//! Flat `key = value` experiment configuration with `#` comments.
//!
//! Lengths take an optional unit suffix (`nm`, `um`, `mm`, `m`; bare numbers
//! are meters) and are stored in meters. Every problem found is reported
//! with its line number; setup validation runs only when the keys parse.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{ConfigIssue, CpiError, Result};
use crate::optics::{Grid, Grid1D, Grid2D};
use crate::refocus::Interpolation;
use crate::scene::{Mask, ObjectModel, OpticalSetup, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    MonteCarlo,
}

impl Engine {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(Self::Analytic),
            "mc" | "monte-carlo" | "monte_carlo" => Some(Self::MonteCarlo),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::MonteCarlo => "monte-carlo",
        }
    }
}

/// Which artifact kinds a run writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exports {
    pub tensor: bool,
    pub images: bool,
    pub metrics: bool,
}

impl Default for Exports {
    fn default() -> Self {
        Self {
            tensor: true,
            images: true,
            metrics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setup: OpticalSetup,
    pub engine: Engine,
    pub n_frames: u64,
    pub output: PathBuf,
    /// Object distances to refocus the simulated tensor on.
    pub refocus: Vec<f64>,
    pub exports: Exports,
    pub interpolation: Interpolation,
    /// PI comparison point `N_x^(p)` for the depth-of-field report.
    pub pi_n_x: Option<usize>,
    /// Integration grid steps given explicitly; planned when absent.
    pub source_step: Option<f64>,
    pub object_step: Option<f64>,
}

/// Command-line overrides applied on top of a parsed configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub engine: Option<Engine>,
    pub frames: Option<u64>,
    pub z_b: Option<f64>,
}

impl ExperimentConfig {
    /// Applies overrides; a new `z_b` re-plans the integration grids unless
    /// they were given explicitly.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(seed) = o.seed {
            self.setup.seed = seed;
        }
        if let Some(engine) = o.engine {
            self.engine = engine;
        }
        if let Some(frames) = o.frames {
            self.n_frames = frames;
        }
        if let Some(z_b) = o.z_b {
            if !(z_b.is_finite() && z_b > 0.0) {
                return Err(issue(
                    0,
                    format!("z_b override: positive length required, got {z_b}"),
                ));
            }
            self.setup = if self.source_step.is_some() || self.object_step.is_some() {
                let s = self.setup.with_z_b(z_b)?;
                s.check()?;
                s
            } else {
                self.setup.replanned_for(z_b)?
            };
        }
        if self.engine == Engine::MonteCarlo && self.n_frames == 0 {
            return Err(issue(
                0,
                "frames must be at least 1 for the monte-carlo engine".into(),
            ));
        }
        Ok(self)
    }

    /// Stable text form of every field that influences results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "setup={:?}", self.setup);
        let _ = writeln!(s, "engine={}", self.engine.name());
        let _ = writeln!(s, "frames={}", self.n_frames);
        let _ = writeln!(s, "refocus={:?}", self.refocus);
        let _ = writeln!(s, "interpolation={:?}", self.interpolation);
        let _ = writeln!(s, "pi_n_x={:?}", self.pi_n_x);
        s
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        hex_digest(self.canonical().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn issue(line: usize, message: String) -> CpiError {
    CpiError::Config(vec![ConfigIssue { line, message }])
}

const KEYS: &[&str] = &[
    "lambda",
    "z_a",
    "z_b",
    "magnification",
    "dims",
    "pixel",
    "n_x",
    "n_u",
    "n_tot",
    "pi_n_x",
    "source",
    "source_sigma",
    "source_radius",
    "source_x",
    "source_y",
    "source_step",
    "object",
    "slit_width",
    "slit_separation",
    "bar_width",
    "bars",
    "object_height",
    "object_x",
    "object_y",
    "object_step",
    "mask_file",
    "engine",
    "frames",
    "seed",
    "output",
    "refocus",
    "export",
    "interpolation",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Entries {
    fn fail(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<(usize, String)> {
        self.map.get(key).cloned()
    }

    fn require(&mut self, key: &str) -> Option<(usize, String)> {
        let v = self.raw(key);
        if v.is_none() {
            self.fail(0, format!("missing required key `{key}`"));
        }
        v
    }

    fn length_from(&mut self, key: &str, entry: Option<(usize, String)>, positive: bool) -> Option<f64> {
        let (line, text) = entry?;
        match parse_length(&text) {
            Ok(v) if positive && v <= 0.0 => {
                self.fail(line, format!("`{key}`: positive length required, got {text}"));
                None
            }
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(line, format!("`{key}`: {e}"));
                None
            }
        }
    }

    fn length(&mut self, key: &str, positive: bool) -> Option<f64> {
        let e = self.require(key);
        self.length_from(key, e, positive)
    }

    fn opt_length(&mut self, key: &str, positive: bool) -> Option<f64> {
        let e = self.raw(key);
        self.length_from(key, e, positive)
    }

    fn number_from<T: std::str::FromStr>(&mut self, key: &str, entry: Option<(usize, String)>) -> Option<T> {
        let (line, text) = entry?;
        if text.ends_with('m') && text.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            self.fail(
                line,
                format!("`{key}` is dimensionless; unit mismatch in `{text}`"),
            );
            return None;
        }
        match text.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(line, format!("`{key}`: cannot parse `{text}`"));
                None
            }
        }
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let e = self.require(key);
        self.number_from(key, e)
    }

    fn opt_number<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let e = self.raw(key);
        self.number_from(key, e)
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.0)
    }
}

/// Parses a length such as `500 nm`, `0.6mm` or `1e-3` (meters).
pub fn parse_length(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(t.len());
    let (num, unit) = (t[..split].trim(), t[split..].trim());
    // Dividing by an exact power of ten rounds once, so "500 nm" == 5e-7.
    let divisor = match unit {
        "" | "m" => 1.0,
        "mm" => 1e3,
        "um" | "µm" => 1e6,
        "nm" => 1e9,
        other => return Err(format!("unknown length unit `{other}` (use nm, um, mm or m)")),
    };
    let v: f64 = num.parse().map_err(|_| format!("cannot parse length `{t}`"))?;
    if !v.is_finite() {
        return Err(format!("length must be finite, got `{t}`"));
    }
    Ok(v / divisor)
}

/// Parses configuration text; relative `mask_file` paths resolve against
/// the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_in(text, Path::new("."))
}

/// Reads and parses a configuration file; relative paths inside it resolve
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_in(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut e = Entries {
        map: BTreeMap::new(),
        issues: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            e.fail(line, format!("expected `key = value`, got `{content}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            e.fail(line, format!("unknown key `{key}`"));
        } else if let Some((first, _)) = e.map.get(key) {
            e.fail(line, format!("duplicate key `{key}` (first set on line {first})"));
        } else {
            e.map.insert(key.to_owned(), (line, value.to_owned()));
        }
    }

    let lambda = e.length("lambda", true);
    let z_a = e.length("z_a", true);
    let z_b = e.length("z_b", true);
    let magnification: Option<f64> = e.number("magnification");
    if magnification.is_some_and(|m| !(m.is_finite() && m > 0.0)) {
        let line = e.line("magnification");
        e.fail(line, "`magnification` must be positive");
    }
    let dims: usize = e.opt_number("dims").unwrap_or(1);
    if !(1..=2).contains(&dims) {
        let line = e.line("dims");
        e.fail(line, "`dims` must be 1 or 2");
    }
    let pixel = e.length("pixel", true);
    let n_x: Option<usize> = e.number("n_x");
    let n_u: Option<usize> = e.number("n_u");
    let n_tot: Option<usize> = e.opt_number("n_tot");
    let pi_n_x: Option<usize> = e.opt_number("pi_n_x");
    let source = parse_source(&mut e);
    let object = parse_object(&mut e, base);
    let source_step = e.opt_length("source_step", true);
    let object_step = e.opt_length("object_step", true);

    let engine = match e.raw("engine") {
        None => Engine::Analytic,
        Some((line, v)) => Engine::parse(&v).unwrap_or_else(|| {
            e.fail(line, format!("`engine` must be analytic or mc, got `{v}`"));
            Engine::Analytic
        }),
    };
    let n_frames: u64 = e.opt_number("frames").unwrap_or(10_000);
    if engine == Engine::MonteCarlo && n_frames == 0 {
        let line = e.line("frames");
        e.fail(line, "`frames` must be at least 1 for the monte-carlo engine");
    }
    let seed: u64 = e.opt_number("seed").unwrap_or(0);
    let output = e
        .raw("output")
        .map_or_else(|| PathBuf::from("out"), |(_, v)| PathBuf::from(v));
    let mut refocus = Vec::new();
    if let Some((line, list)) = e.raw("refocus") {
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match parse_length(item) {
                Ok(v) if v > 0.0 => refocus.push(v),
                Ok(_) => e.fail(line, format!("`refocus`: positive length required, got {item}")),
                Err(err) => e.fail(line, format!("`refocus`: {err}")),
            }
        }
    }
    let mut exports = Exports::default();
    if let Some((line, list)) = e.raw("export") {
        exports = Exports {
            tensor: false,
            images: false,
            metrics: false,
        };
        for item in list.split(',').map(str::trim) {
            match item {
                "cpig" => exports.tensor = true,
                "pgm" => exports.images = true,
                "csv" => exports.metrics = true,
                other => e.fail(
                    line,
                    format!("`export`: unknown format `{other}` (cpig, pgm, csv)"),
                ),
            }
        }
    }
    let interpolation = match e.raw("interpolation").as_ref().map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "linear")) => Interpolation::Linear,
        Some((_, "nearest")) => Interpolation::Nearest,
        Some((line, other)) => {
            e.fail(
                line,
                format!("`interpolation` must be linear or nearest, got `{other}`"),
            );
            Interpolation::Linear
        }
    };

    if !e.issues.is_empty() {
        return Err(CpiError::Config(e.issues));
    }
    let (
        Some(lambda),
        Some(z_a),
        Some(z_b),
        Some(m),
        Some(pixel),
        Some(n_x),
        Some(n_u),
        Some(source),
        Some(object),
    ) = (lambda, z_a, z_b, magnification, pixel, n_x, n_u, source, object)
    else {
        unreachable!("missing values are reported as issues");
    };

    let setup = (|| {
        let ((x0, x1), y_support) = object.support();
        let mut b = OpticalSetup::builder(lambda, z_a, z_b, m, source, object)
            .pixel_detectors(dims, pixel, n_x, n_u)?
            .seed(seed);
        if let Some(n) = n_tot {
            b = b.pixel_budget(n);
        }
        if let Some(step) = source_step {
            let half = 1.5 * source.width().max(step);
            let (cx, cy) = source.center();
            b = b.source_grid(square_or_line(dims, half, step, cx, cy)?);
        }
        if let Some(step) = object_step {
            let half = (x1 - x0) / 2.0 + step;
            let grid = match (dims, y_support) {
                (2, Some((y0, y1))) => Grid::Two(Grid2D::new(
                    Grid1D::covering(half, step, (x0 + x1) / 2.0)?,
                    Grid1D::covering((y1 - y0) / 2.0 + step, step, (y0 + y1) / 2.0)?,
                )),
                _ => Grid::One(Grid1D::covering(half, step, (x0 + x1) / 2.0)?),
            };
            b = b.object_grid(grid);
        }
        b.build()
    })()
    .map_err(|err| issue(0, format!("setup validation failed: {err}")))?;

    Ok(ExperimentConfig {
        setup,
        engine,
        n_frames,
        output,
        refocus,
        exports,
        interpolation,
        pi_n_x,
        source_step,
        object_step,
    })
}

fn square_or_line(dims: usize, half: f64, step: f64, cx: f64, cy: f64) -> Result<Grid> {
    Ok(if dims == 2 {
        Grid::Two(Grid2D::new(
            Grid1D::covering(half, step, cx)?,
            Grid1D::covering(half, step, cy)?,
        ))
    } else {
        Grid::One(Grid1D::covering(half, step, cx)?)
    })
}

fn parse_source(e: &mut Entries) -> Option<SourceModel> {
    let (line, kind) = e.require("source")?;
    let x = e.opt_length("source_x", false).unwrap_or(0.0);
    let y = e.opt_length("source_y", false).unwrap_or(0.0);
    let model = match kind.as_str() {
        "gaussian" => SourceModel::gaussian(e.length("source_sigma", true)?),
        "flat_disk" => SourceModel::flat_disk(e.length("source_radius", true)?),
        "point" => Ok(SourceModel::point()),
        other => {
            e.fail(
                line,
                format!("unknown source `{other}` (gaussian, flat_disk, point)"),
            );
            return None;
        }
    };
    match model {
        Ok(m) => Some(m.with_center(x, y)),
        Err(err) => {
            e.fail(line, err.to_string());
            None
        }
    }
}

fn parse_object(e: &mut Entries, base: &Path) -> Option<ObjectModel> {
    let (line, kind) = e.require("object")?;
    let x = e.opt_length("object_x", false).unwrap_or(0.0);
    let y = e.opt_length("object_y", false).unwrap_or(0.0);
    let height = e.opt_length("object_height", true);
    let model = match kind.as_str() {
        "single_slit" => ObjectModel::single_slit(e.length("slit_width", true)?),
        "double_slit" => {
            let w = e.length("slit_width", true);
            let s = e.length("slit_separation", true);
            ObjectModel::double_slit(w?, s?)
        }
        "triple_slit" => {
            let w = e.length("slit_width", true);
            let s = e.length("slit_separation", true);
            ObjectModel::triple_slit(w?, s?)
        }
        "bar_chart" => {
            let w = e.length("bar_width", true);
            let n: Option<usize> = e.number("bars");
            ObjectModel::bar_chart(w?, n?)
        }
        "point" => Ok(ObjectModel::point()),
        "mask" => {
            let (_, file) = e.require("mask_file")?;
            Mask::load(&base.join(file)).map(ObjectModel::custom)
        }
        other => {
            e.fail(
                line,
                format!("unknown object `{other}` (single_slit, double_slit, triple_slit, bar_chart, point, mask)"),
            );
            return None;
        }
    };
    let model = model.map(|m| m.with_center(x, y)).and_then(|m| match height {
        Some(h) => m.with_height(h),
        None => Ok(m),
    });
    match model {
        Ok(m) => Some(m),
        Err(err) => {
            e.fail(line, err.to_string());
            None
        }
    }
}
