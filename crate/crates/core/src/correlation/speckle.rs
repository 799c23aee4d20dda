use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::accumulator::{monte_carlo_provenance, CorrelationAccumulator};
use super::rng::frame_rng;
use super::tensor::{GammaTensor, TensorMeta};
use crate::error::{CpiError, Result};
use crate::optics::{ComplexField, FresnelPropagator, Grid, Grid1D};
use crate::scene::{sample_object_aperture, sample_source_intensity, OpticalSetup};

/// Frames per independently accumulated chunk; chunks are merged in order so
/// results do not depend on the thread count.
const CHUNK_FRAMES: u64 = 1024;

// One per simulator, so the size difference between variants is irrelevant.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
enum Transport {
    /// Dense source-to-detector matrices over the emitting source samples.
    Dense {
        to_a: Vec<Complex64>,
        to_b: Vec<Complex64>,
    },
    /// Separable propagation on 2-D grids.
    Planar {
        to_a: FresnelPropagator,
        to_o: FresnelPropagator,
        /// `A(ρo) e^{−ik|ρo|²/(2 z_b)} Δo` on the object grid.
        object: Vec<Complex64>,
        lens_x: Vec<Complex64>,
        lens_y: Vec<Complex64>,
    },
}

/// Generates chaotic-light speckle frames for a setup.
///
/// Each frame draws `E_s = √F e^{iφ}` with i.i.d. uniform phases, propagates
/// it over `z_a` to D_a, and over `z_b` to the object, then images the
/// object plane onto D_b through the thin lens: the lens phase
/// `e^{−ik|ρo|²/(2 z_b)}` cancels the object-plane curvature and the lens
/// maps source points to `ρb = −M ρs`. Overall constant factors of the D_b
/// field are dropped.
#[derive(Debug, Clone)]
pub struct SpeckleSimulator {
    seed: u64,
    meta: TensorMeta,
    /// Emitting source samples (flat indices) and their amplitudes `√F`.
    active: Vec<usize>,
    amplitude: Vec<f64>,
    n_source: usize,
    transport: Transport,
}

impl SpeckleSimulator {
    pub fn new(setup: &OpticalSetup) -> Result<Self> {
        setup.check()?;
        let k = setup.wavenumber;
        let f = sample_source_intensity(&setup.source, &setup.grid_s)?;
        let (active, amplitude): (Vec<usize>, Vec<f64>) = f
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, v)| (i, v.sqrt()))
            .unzip();
        let aperture = sample_object_aperture(&setup.object, &setup.grid_o)?;
        let to_a = FresnelPropagator::new(&setup.grid_s, &setup.grid_a, setup.z_a, k)?;
        let to_o = FresnelPropagator::new(&setup.grid_s, &setup.grid_o, setup.z_b, k)?;
        let lens_scale = k.k() / (setup.z_b * setup.magnification);
        let lens = |b: &Grid1D, o: &Grid1D| -> Vec<Complex64> {
            b.coords()
                .flat_map(|xb| {
                    o.coords()
                        .map(move |xo| Complex64::from_polar(1.0, -lens_scale * xo * xb))
                })
                .collect()
        };
        let curvature = -k.k() / setup.z_b;
        let object: Vec<Complex64> = setup
            .grid_o
            .positions()
            .zip(aperture.values())
            .map(|((x, y), a)| {
                a * crate::optics::chirp_factor((x * x + y * y).sqrt(), curvature) * setup.grid_o.cell()
            })
            .collect();

        let transport = match (&setup.grid_s, &setup.grid_o, &setup.grid_b) {
            (Grid::One(_), Grid::One(go), Grid::One(gb)) => {
                let ns = setup.grid_s.len();
                let gather = |m: &[Complex64], rows: usize| -> Vec<Complex64> {
                    (0..rows)
                        .flat_map(|r| active.iter().map(move |&s| m[r * ns + s]))
                        .collect()
                };
                // Full matrices: to_a is n_a x n_s, object transfer n_o x n_s.
                let dense_a = dense(&to_a);
                let dense_o = dense(&to_o);
                let l = lens(gb, go);
                let no = go.n();
                let mut to_b = vec![Complex64::new(0.0, 0.0); gb.n() * ns];
                to_b.par_chunks_mut(ns).enumerate().for_each(|(ib, row)| {
                    for io in 0..no {
                        let w = l[ib * no + io] * object[io];
                        if w.norm_sqr() == 0.0 {
                            continue;
                        }
                        for (r, g) in row.iter_mut().zip(&dense_o[io * ns..(io + 1) * ns]) {
                            *r += w * g;
                        }
                    }
                });
                Transport::Dense {
                    to_a: gather(&dense_a, setup.grid_a.len()),
                    to_b: gather(&to_b, gb.n()),
                }
            }
            (Grid::Two(_), Grid::Two(go), Grid::Two(gb)) => Transport::Planar {
                to_a,
                to_o,
                object,
                lens_x: lens(&gb.x, &go.x),
                lens_y: lens(&gb.y, &go.y),
            },
            _ => {
                return Err(CpiError::Dimension(
                    "all setup grids must share one dimension".into(),
                ))
            }
        };
        Ok(Self {
            seed: setup.seed,
            meta: TensorMeta {
                grid_a: setup.grid_a,
                grid_b: setup.grid_b,
                z_a: setup.z_a,
                z_b: setup.z_b,
                magnification: setup.magnification,
                provenance: crate::correlation::Provenance::Analytic,
            },
            active,
            amplitude,
            n_source: setup.grid_s.len(),
            transport,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid_a(&self) -> &Grid {
        &self.meta.grid_a
    }

    pub fn grid_b(&self) -> &Grid {
        &self.meta.grid_b
    }

    /// Random source field of one frame on the emitting samples.
    fn source_field(&self, frame_index: u64) -> Vec<Complex64> {
        let mut rng = frame_rng(self.seed, frame_index);
        self.amplitude
            .iter()
            .map(|&a| Complex64::from_polar(a, 2.0 * PI * rng.random::<f64>()))
            .collect()
    }

    /// Raw fields `(E_a, E_b)` of one frame.
    pub fn frame_values(&self, frame_index: u64) -> (Vec<Complex64>, Vec<Complex64>) {
        let es = self.source_field(frame_index);
        match &self.transport {
            Transport::Dense { to_a, to_b } => (mat_vec(to_a, &es), mat_vec(to_b, &es)),
            Transport::Planar {
                to_a,
                to_o,
                object,
                lens_x,
                lens_y,
            } => {
                let mut full = vec![Complex64::new(0.0, 0.0); self.n_source];
                for (&i, e) in self.active.iter().zip(&es) {
                    full[i] = *e;
                }
                let ea = to_a.apply(&full);
                let mut eo = to_o.apply(&full);
                eo.iter_mut().zip(object).for_each(|(e, w)| *e *= w);
                let (Grid::Two(go), Grid::Two(gb)) = (to_o.dst(), &self.meta.grid_b) else {
                    unreachable!("planar transport is built from 2-D grids")
                };
                (
                    ea,
                    lens_2d(&eo, go.x.n(), go.y.n(), gb.x.n(), gb.y.n(), lens_x, lens_y),
                )
            }
        }
    }

    /// One frame as fields on D_a and D_b.
    pub fn frame(&self, frame_index: u64) -> Result<(ComplexField, ComplexField)> {
        let (a, b) = self.frame_values(frame_index);
        Ok((
            ComplexField::new(self.meta.grid_a, a)?,
            ComplexField::new(self.meta.grid_b, b)?,
        ))
    }

    /// Accumulates frames `range` in fixed chunks, merged in index order.
    pub fn accumulate(&self, range: Range<u64>, track_intensity: bool) -> Result<CorrelationAccumulator> {
        let (na, nb) = (self.meta.grid_a.len(), self.meta.grid_b.len());
        let starts: Vec<u64> = (range.start..range.end).step_by(CHUNK_FRAMES as usize).collect();
        let parts = starts
            .par_iter()
            .map(|&start| {
                let mut acc = CorrelationAccumulator::new(na, nb, track_intensity);
                for i in start..(start + CHUNK_FRAMES).min(range.end) {
                    let (a, b) = self.frame_values(i);
                    acc.add_frame(&a, &b)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = CorrelationAccumulator::new(na, nb, track_intensity);
        for p in parts {
            total.merge(p)?;
        }
        Ok(total)
    }

    /// Field-estimator tensor from an accumulator of this simulator's frames.
    pub fn estimate(&self, acc: &CorrelationAccumulator) -> Result<GammaTensor> {
        acc.field_gamma(TensorMeta {
            provenance: monte_carlo_provenance(acc, self.seed),
            ..self.meta
        })
    }

    /// Intensity-covariance tensor from an accumulator with intensity sums.
    pub fn estimate_covariance(&self, acc: &CorrelationAccumulator) -> Result<GammaTensor> {
        acc.covariance_gamma(TensorMeta {
            provenance: monte_carlo_provenance(acc, self.seed),
            ..self.meta
        })
    }
}

fn dense(p: &FresnelPropagator) -> Vec<Complex64> {
    let axis = &p.axes()[0];
    let carrier = p.apply_carrier();
    (0..axis.dst().n())
        .flat_map(|j| axis.row(j).iter().map(move |v| v * carrier))
        .collect()
}

fn mat_vec(m: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    if v.is_empty() {
        return vec![Complex64::new(0.0, 0.0); m.len()];
    }
    m.chunks(v.len())
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `E_b(bx, by) = Σ_{ox, oy} Lx[bx][ox] Ly[by][oy] E(ox, oy)`.
fn lens_2d(
    e: &[Complex64],
    nox: usize,
    noy: usize,
    nbx: usize,
    nby: usize,
    lx: &[Complex64],
    ly: &[Complex64],
) -> Vec<Complex64> {
    let mut partial = vec![Complex64::new(0.0, 0.0); noy * nbx];
    for oy in 0..noy {
        let row = &e[oy * nox..(oy + 1) * nox];
        for bx in 0..nbx {
            partial[oy * nbx + bx] = lx[bx * nox..(bx + 1) * nox]
                .iter()
                .zip(row)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); nby * nbx];
    for by in 0..nby {
        for bx in 0..nbx {
            out[by * nbx + bx] = (0..noy)
                .map(|oy| ly[by * noy + oy] * partial[oy * nbx + bx])
                .sum();
        }
    }
    out
}

/// One speckle frame `(E_a, E_b)`; deterministic in `(setup.seed, frame_index)`.
pub fn generate_speckle_frame(
    setup: &OpticalSetup,
    frame_index: u64,
) -> Result<(ComplexField, ComplexField)> {
    SpeckleSimulator::new(setup)?.frame(frame_index)
}

/// Accumulates frames `0..n_frames` of `setup`.
pub fn accumulate_frames(
    setup: &OpticalSetup,
    n_frames: u64,
    track_intensity: bool,
) -> Result<CorrelationAccumulator> {
    if n_frames == 0 {
        return Err(crate::error::invalid("frames", "need at least one frame"));
    }
    SpeckleSimulator::new(setup)?.accumulate(0..n_frames, track_intensity)
}

/// Monte Carlo Γ estimate from `n_frames` frames with the field estimator.
pub fn gamma_monte_carlo(setup: &OpticalSetup, n_frames: u64) -> Result<GammaTensor> {
    if n_frames == 0 {
        return Err(crate::error::invalid("frames", "need at least one frame"));
    }
    let sim = SpeckleSimulator::new(setup)?;
    let acc = sim.accumulate(0..n_frames, false)?;
    sim.estimate(&acc)
}
