//! Experiment drivers behind the `cpi` subcommands.
//!
//! Every driver computes all results before touching the output directory,
//! so a failing run leaves no partial artifacts. Each artifact gets a
//! `<name>.meta` sidecar carrying the tool version, config hash and seed.

use std::path::{Path, PathBuf};

use super::config::{hex_digest, Engine, ExperimentConfig};
use super::cpig::{decode_gamma, encode_gamma};
use super::pgm::encode_pgm;
use crate::analysis::{analysis_report, ghost_psf_sigma, measure_image, MetricsReport, PixelBudget};
use crate::correlation::{gamma_analytic, gamma_monte_carlo, incoherent_image, GammaTensor, Provenance};
use crate::error::{invalid, Result};
use crate::image::ImagePlane;
use crate::optics::{Grid, Grid1D, Grid2D};
use crate::refocus::{refocus_scale, Interpolation, RefocusParams};
use crate::scene::{ObjectModel, OpticalSetup};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by one run, in write order, plus the metrics it reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub report: MetricsReport,
}

/// Identity recorded in every sidecar.
#[derive(Debug, Clone, PartialEq)]
struct Stamp {
    config_hash: String,
    seed: u64,
    engine: &'static str,
}

impl Stamp {
    fn of(config: &ExperimentConfig) -> Self {
        Self {
            config_hash: config.hash(),
            seed: config.setup.seed,
            engine: config.engine.name(),
        }
    }

    fn sidecar(&self, artifact: &str, raw_peak: Option<f64>) -> String {
        let mut s = format!(
            "artifact={artifact}\ntool_version={TOOL_VERSION}\nconfig_hash={}\nseed={}\nengine={}\n",
            self.config_hash, self.seed, self.engine
        );
        if let Some(p) = raw_peak {
            s.push_str(&format!("raw_peak={p:e}\n"));
        }
        s
    }
}

/// Pending writes, flushed together once every result is known.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, stamp: &Stamp, name: &str, bytes: Vec<u8>, raw_peak: Option<f64>) {
        self.files.push((name.to_owned(), bytes));
        self.files
            .push((format!("{name}.meta"), stamp.sidecar(name, raw_peak).into_bytes()));
    }

    fn flush(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(name);
            super::write_atomic(&path, &bytes)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn simulate_gamma(config: &ExperimentConfig) -> Result<GammaTensor> {
    match config.engine {
        Engine::Analytic => gamma_analytic(&config.setup),
        Engine::MonteCarlo => gamma_monte_carlo(&config.setup, config.n_frames),
    }
}

/// Analytic focused image (`z_b = z_a`) of the configured object.
fn focused_reference(setup: &OpticalSetup) -> Result<ImagePlane> {
    let focused = setup.replanned_for(setup.z_a)?;
    Ok(incoherent_image(&gamma_analytic(&focused)?))
}

/// Simulates Γ with the configured engine and writes the tensor, the
/// incoherent image (`focused` or `defocused`), an analytic focused
/// reference when out of focus, one refocused image per configured target,
/// and `metrics.csv`.
pub fn run_simulate(config: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let setup = &config.setup;
    let stamp = Stamp::of(config);
    let gamma = simulate_gamma(config)?;
    let image = incoherent_image(&gamma);
    let object = Some(&setup.object);

    let mut report = MetricsReport::default();
    report.push("z_a", setup.z_a, "m", "source to D_a");
    report.push("z_b", setup.z_b, "m", "source to object");
    if let Provenance::MonteCarlo { n_frames, .. } = gamma.provenance() {
        report.push("n_frames", n_frames as f64, "1", "speckle realizations");
    }
    report.push(
        "gamma_raw_peak",
        gamma.raw_peak(),
        "1",
        "peak of |G1|^2 before normalization",
    );

    let mut outputs = Outputs::default();
    if config.exports.tensor {
        outputs.add(&stamp, "gamma.cpig", encode_gamma(&gamma), Some(gamma.raw_peak()));
    }
    let reference = if setup.is_focused() {
        report.push_image("focused", &measure_image(&image, None, object));
        if config.exports.images {
            outputs.add(&stamp, "focused.pgm", encode_pgm(&image), Some(image.raw_peak()));
        }
        image
    } else {
        let reference = focused_reference(setup)?;
        report.push_image("reference", &measure_image(&reference, None, object));
        report.push_image("defocused", &measure_image(&image, Some(&reference), object));
        if config.exports.images {
            outputs.add(
                &stamp,
                "defocused.pgm",
                encode_pgm(&image),
                Some(image.raw_peak()),
            );
            outputs.add(
                &stamp,
                "focused.pgm",
                encode_pgm(&reference),
                Some(reference.raw_peak()),
            );
        }
        reference
    };
    for (i, &target) in config.refocus.iter().enumerate() {
        let params = RefocusParams::new(setup.z_a, target, setup.magnification, config.interpolation)?;
        let refocused = refocus_scale(&gamma, &params)?;
        let img = incoherent_image(&refocused.tensor);
        let prefix = format!("refocused_{}", i + 1);
        report.push(format!("{prefix}_z_b"), target, "m", "refocus target");
        report.push(
            format!("{prefix}_out_of_range"),
            refocused.out_of_range,
            "1",
            "zero-filled lookups",
        );
        report.push_image(&prefix, &measure_image(&img, Some(&reference), object));
        if config.exports.images {
            outputs.add(
                &stamp,
                &format!("{prefix}.pgm"),
                encode_pgm(&img),
                Some(img.raw_peak()),
            );
        }
    }
    if config.exports.metrics {
        outputs.add(&stamp, "metrics.csv", report.to_csv().into_bytes(), None);
    }
    Ok(Artifacts {
        files: outputs.flush(out)?,
        report,
    })
}

/// Parameters of a refocus run on a stored tensor.
#[derive(Debug, Clone, Default)]
pub struct RefocusJob<'a> {
    /// Object distance to refocus on; the tensor's own `z_b` when absent.
    pub target: Option<f64>,
    pub interpolation: Interpolation,
    /// Geometry of the recorded experiment, used for slit visibility and an
    /// analytic focused reference.
    pub config: Option<&'a ExperimentConfig>,
}

/// Refocuses a CPIG tensor and writes `refocused.pgm` and `refocus.csv`.
pub fn run_refocus(gamma_path: &Path, job: &RefocusJob, out: &Path) -> Result<Artifacts> {
    let bytes = std::fs::read(gamma_path)?;
    let gamma = decode_gamma(&bytes)?;
    let stamp = match job.config {
        Some(c) => Stamp::of(c),
        None => sidecar_stamp(gamma_path).unwrap_or_else(|| Stamp {
            config_hash: hex_digest(&bytes),
            seed: match gamma.provenance() {
                Provenance::MonteCarlo { seed, .. } => seed,
                _ => 0,
            },
            engine: "refocus",
        }),
    };
    let target = job.target.unwrap_or(gamma.z_b());
    let params = RefocusParams::new(gamma.z_a(), target, gamma.magnification(), job.interpolation)?;
    let refocused = refocus_scale(&gamma, &params)?;
    let image = incoherent_image(&refocused.tensor);

    let object = job.config.map(|c| &c.setup.object);
    let reference = job.config.map(|c| focused_reference(&c.setup)).transpose()?;
    let mut report = MetricsReport::default();
    report.push("refocus_z_b", target, "m", "refocus target");
    report.push("out_of_range", refocused.out_of_range, "1", "zero-filled lookups");
    report.push_image("refocused", &measure_image(&image, reference.as_ref(), object));

    let mut outputs = Outputs::default();
    outputs.add(
        &stamp,
        "refocused.pgm",
        encode_pgm(&image),
        Some(image.raw_peak()),
    );
    outputs.add(&stamp, "refocus.csv", report.to_csv().into_bytes(), None);
    Ok(Artifacts {
        files: outputs.flush(out)?,
        report,
    })
}

/// Recovers the stamp from the sidecar written next to a tensor.
fn sidecar_stamp(gamma_path: &Path) -> Option<Stamp> {
    let mut name = gamma_path.file_name()?.to_owned();
    name.push(".meta");
    let text = std::fs::read_to_string(gamma_path.with_file_name(name)).ok()?;
    let get = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
            .map(str::to_owned)
    };
    Some(Stamp {
        config_hash: get("config_hash")?,
        seed: get("seed")?.parse().ok()?,
        engine: "refocus",
    })
}

/// Writes the depth-of-field and resolution report `analysis.csv`.
pub fn run_analyze(config: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let setup = &config.setup;
    let n_tot = setup
        .n_tot
        .ok_or_else(|| invalid("n_tot", "the analysis needs a declared pixel budget"))?;
    let pi_n_x = config
        .pi_n_x
        .ok_or_else(|| invalid("pi_n_x", "the analysis needs the PI comparison point N_x^(p)"))?;
    let gx = setup.grid_a.x();
    let budget = PixelBudget::from_spatial(n_tot, gx.step(), pi_n_x, gx.n())?;
    let report = analysis_report(setup, &budget)?;
    let mut outputs = Outputs::default();
    outputs.add(
        &Stamp::of(config),
        "analysis.csv",
        report.to_csv().into_bytes(),
        None,
    );
    Ok(Artifacts {
        files: outputs.flush(out)?,
        report,
    })
}

/// Focused point-object image on a D_a grid fine enough to resolve the
/// ghost-image PSF; writes `psf.pgm` and `psf.csv`.
pub fn run_psf(config: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    let base = &config.setup;
    let (ox, oy) = base.object.center();
    let dims = base.dims();
    let predicted = ghost_psf_sigma(base.lambda(), base.z_b, &base.source);
    let pitch = base.grid_a.min_step();
    let step = predicted.map_or(pitch, |s| (s / 5.0).min(pitch));
    let half = predicted.map_or(16.0 * step, |s| 8.0 * s);
    let axis = |c: f64| Grid1D::covering(half, step, c);
    // Γ of a point object does not depend on ρb, so a small D_b suffices.
    let b_axis = Grid1D::new(8, base.grid_b.min_step(), 0.0)?;
    let (grid_a, grid_b) = if dims == 2 {
        (
            Grid::Two(Grid2D::new(axis(ox)?, axis(oy)?)),
            Grid::Two(Grid2D::square(b_axis)),
        )
    } else {
        (Grid::One(axis(ox)?), Grid::One(b_axis))
    };
    let object = ObjectModel::point().with_center(ox, oy);
    let setup = OpticalSetup::builder(
        base.lambda(),
        base.z_a,
        base.z_b,
        base.magnification,
        base.source,
        object,
    )
    .detectors(grid_a, grid_b)
    .seed(base.seed)
    .build()?;
    let image = incoherent_image(&match config.engine {
        Engine::Analytic => gamma_analytic(&setup)?,
        Engine::MonteCarlo => gamma_monte_carlo(&setup, config.n_frames)?,
    });
    let m = measure_image(&image, None, None);
    let mut report = MetricsReport::default();
    report.push("psf_sigma", m.psf_sigma, "m", "second moment of the main peak");
    if let Some(p) = predicted {
        report.push("psf_sigma_predicted", p, "m", "z_b / (sqrt(2) k sigma)");
        report.push("psf_sigma_ratio", m.psf_sigma / p, "1", "measured / predicted");
    }
    report.push("psf_peak_x", m.peak_position, "m", "argmax");
    let stamp = Stamp::of(config);
    let mut outputs = Outputs::default();
    outputs.add(&stamp, "psf.pgm", encode_pgm(&image), Some(image.raw_peak()));
    outputs.add(&stamp, "psf.csv", report.to_csv().into_bytes(), None);
    Ok(Artifacts {
        files: outputs.flush(out)?,
        report,
    })
}
