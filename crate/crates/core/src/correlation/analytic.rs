use num_complex::Complex64;
use rayon::prelude::*;

use super::tensor::{GammaTensor, Provenance, TensorMeta};
use crate::error::{CpiError, Result};
use crate::optics::{fourier_profile, ComplexField, Grid, Grid1D, RealField};
use crate::scene::{sample_object_aperture, sample_source_intensity, OpticalSetup};

/// Object samples processed together when tabulating the source integral.
const OBJECT_BLOCK: usize = 16;

/// Complex dot product of split-storage vectors, four lanes at a time.
fn cdot(wr: &[f64], wi: &[f64], ur: &[f64], ui: &[f64]) -> Complex64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let n4 = wr.len() / 4 * 4;
    for j in (0..n4).step_by(4) {
        for l in 0..4 {
            let (a, b, c, d) = (wr[j + l], wi[j + l], ur[j + l], ui[j + l]);
            re[l] += a * c - b * d;
            im[l] += a * d + b * c;
        }
    }
    let mut acc = Complex64::new(
        (re[0] + re[1]) + (re[2] + re[3]),
        (im[0] + im[1]) + (im[2] + im[3]),
    );
    for j in n4..wr.len() {
        acc += Complex64::new(wr[j], wi[j]) * Complex64::new(ur[j], ui[j]);
    }
    acc
}

/// Tabulates the source-plane integral along one axis,
///
/// `I(ρo, ρa) = Σ_s w_s e^{i c s²/2} e^{−i κ s}`, `κ = k (ρo/z_b − ρa/z_a)`,
///
/// for every `ρa` on `axis_a` and every `ρo` in `objects`; `w_s` already
/// includes the cell width. The plane-wave factor separates into a ρa part
/// (folded into the per-ρa weights) and a ρo part, so the table is a
/// matrix product. Result is `n_a x objects.len()`, ρa-major.
pub(crate) fn source_integral_table(
    axis_a: &Grid1D,
    objects: &[f64],
    sources: &[f64],
    weights: &[f64],
    k: f64,
    z_a: f64,
    z_b: f64,
) -> Vec<Complex64> {
    let curvature = k * (1.0 / z_b - 1.0 / z_a);
    let ns = sources.len();
    let na = axis_a.n();
    let no = objects.len();
    let (w_re, w_im): (Vec<f64>, Vec<f64>) = (0..na)
        .into_par_iter()
        .flat_map_iter(|ia| {
            let a = axis_a.coord(ia);
            sources.iter().zip(weights).map(move |(&s, &w)| {
                let z = Complex64::from_polar(w, 0.5 * curvature * s * s + k * a * s / z_a);
                (z.re, z.im)
            })
        })
        .unzip();

    let mut table = vec![Complex64::new(0.0, 0.0); na * no];
    for block in (0..no).step_by(OBJECT_BLOCK) {
        let block_end = (block + OBJECT_BLOCK).min(no);
        let (u_re, u_im): (Vec<f64>, Vec<f64>) = objects[block..block_end]
            .par_iter()
            .flat_map_iter(|&o| {
                sources.iter().map(move |&s| {
                    let (sin, cos) = (-k * o * s / z_b).sin_cos();
                    (cos, sin)
                })
            })
            .unzip();
        table.par_chunks_mut(no).enumerate().for_each(|(ia, row)| {
            let wr = &w_re[ia * ns..(ia + 1) * ns];
            let wi = &w_im[ia * ns..(ia + 1) * ns];
            for (j, io) in (block..block_end).enumerate() {
                let ur = &u_re[j * ns..(j + 1) * ns];
                let ui = &u_im[j * ns..(j + 1) * ns];
                row[io] = cdot(wr, wi, ur, ui);
            }
        });
    }
    table
}

/// Non-zero samples of a real profile along one axis: (positions, values x cell).
fn compress(axis: &Grid1D, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    axis.coords()
        .zip(values)
        .filter(|(_, v)| **v != 0.0)
        .map(|(x, v)| (x, v * axis.step()))
        .unzip()
}

fn meta(setup: &OpticalSetup, provenance: Provenance) -> TensorMeta {
    TensorMeta {
        grid_a: setup.grid_a,
        grid_b: setup.grid_b,
        z_a: setup.z_a,
        z_b: setup.z_b,
        magnification: setup.magnification,
        provenance,
    }
}

fn finish(setup: &OpticalSetup, provenance: Provenance, values: Vec<f64>) -> Result<GammaTensor> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CpiError::NonFinite("correlation quadrature"));
    }
    GammaTensor::from_raw(meta(setup, provenance), values)
}

/// Γ(ρa, ρb) by direct quadrature of the source and object integrals.
///
/// 1-D: the source integral is tabulated once per ρa for every open object
/// sample, then the object sum is evaluated for every ρb. 2-D requires a
/// separable source profile so that the source integral factors per axis.
pub fn gamma_analytic(setup: &OpticalSetup) -> Result<GammaTensor> {
    setup.check()?;
    let aperture = sample_object_aperture(&setup.object, &setup.grid_o)?;
    gamma_analytic_with_aperture(setup, &aperture)
}

/// [`gamma_analytic`] with an explicit complex aperture sampled on the
/// setup's object grid (phase masks, measured transmissions).
pub fn gamma_analytic_with_aperture(setup: &OpticalSetup, aperture: &ComplexField) -> Result<GammaTensor> {
    setup.check()?;
    if aperture.grid() != &setup.grid_o {
        return Err(CpiError::Dimension(
            "aperture must be sampled on the object grid".into(),
        ));
    }
    let k = setup.k();
    let values = match (&setup.grid_a, &setup.grid_b, &setup.grid_o, &setup.grid_s) {
        (Grid::One(ga), Grid::One(gb), Grid::One(go), Grid::One(gs)) => {
            let f = sample_source_intensity(&setup.source, &setup.grid_s)?;
            let (s_pos, s_w) = compress(gs, f.values());
            let (o_pos, o_amp): (Vec<f64>, Vec<Complex64>) = go
                .coords()
                .zip(aperture.values())
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(x, a)| (x, a * go.step()))
                .unzip();
            let table = source_integral_table(ga, &o_pos, &s_pos, &s_w, k, setup.z_a, setup.z_b);
            object_sum_1d(setup, ga, gb, &o_pos, &o_amp, &table)
        }
        (Grid::Two(ga), Grid::Two(gb), Grid::Two(go), Grid::Two(gs)) => {
            if !setup.source.is_separable() {
                return Err(CpiError::Unsupported(
                    "2-D correlation quadrature needs a separable source profile".into(),
                ));
            }
            let (cx, cy) = setup.source.center();
            let fx = setup.source.axis_profile(&gs.x, cx)?;
            let fy = setup.source.axis_profile(&gs.y, cy)?;
            let (sx, wx) = compress(&gs.x, &fx);
            let (sy, wy) = compress(&gs.y, &fy);
            let ox: Vec<f64> = go.x.coords().collect();
            let oy: Vec<f64> = go.y.coords().collect();
            let tx = source_integral_table(&ga.x, &ox, &sx, &wx, k, setup.z_a, setup.z_b);
            let ty = source_integral_table(&ga.y, &oy, &sy, &wy, k, setup.z_a, setup.z_b);
            let amp: Vec<Complex64> = aperture
                .values()
                .iter()
                .map(|a| a * setup.grid_o.cell())
                .collect();
            object_sum_2d(setup, ga, gb, go, &amp, &tx, &ty)
        }
        _ => {
            return Err(CpiError::Dimension(
                "all setup grids must share one dimension".into(),
            ))
        }
    };
    finish(setup, Provenance::Analytic, values)
}

/// `Γ(a, b) = |Σ_o amp_o e^{−ik ρo ρb/(z_b M)} I(ρo, ρa)|²`.
fn object_sum_1d(
    setup: &OpticalSetup,
    ga: &Grid1D,
    gb: &Grid1D,
    o_pos: &[f64],
    o_amp: &[Complex64],
    table: &[Complex64],
) -> Vec<f64> {
    let scale = setup.k() / (setup.z_b * setup.magnification);
    let no = o_pos.len();
    let phase: Vec<Complex64> = gb
        .coords()
        .flat_map(|b| {
            o_pos
                .iter()
                .zip(o_amp)
                .map(move |(&o, &amp)| amp * Complex64::from_polar(1.0, -scale * o * b))
        })
        .collect();
    let nb = gb.n();
    let mut out = vec![0.0; ga.n() * nb];
    out.par_chunks_mut(nb).enumerate().for_each(|(ia, row)| {
        let t = &table[ia * no..(ia + 1) * no];
        for (ib, v) in row.iter_mut().enumerate() {
            let p = &phase[ib * no..(ib + 1) * no];
            let g: Complex64 = p.iter().zip(t).map(|(x, y)| x * y).sum();
            *v = g.norm_sqr();
        }
    });
    out
}

/// 2-D object sum, evaluated per (ρa) as two separable passes over ρo.
fn object_sum_2d(
    setup: &OpticalSetup,
    ga: &crate::optics::Grid2D,
    gb: &crate::optics::Grid2D,
    go: &crate::optics::Grid2D,
    amp: &[Complex64],
    tx: &[Complex64],
    ty: &[Complex64],
) -> Vec<f64> {
    let scale = setup.k() / (setup.z_b * setup.magnification);
    let kernel = |b_axis: &Grid1D, o_axis: &Grid1D| -> Vec<Complex64> {
        b_axis
            .coords()
            .flat_map(|b| {
                o_axis
                    .coords()
                    .map(move |o| Complex64::from_polar(1.0, -scale * o * b))
            })
            .collect()
    };
    let px = kernel(&gb.x, &go.x);
    let py = kernel(&gb.y, &go.y);
    let (nox, noy) = (go.x.n(), go.y.n());
    let (nbx, nby) = (gb.x.n(), gb.y.n());
    let nb = gb.len();
    let mut out = vec![0.0; ga.len() * nb];
    out.par_chunks_mut(nb).enumerate().for_each(|(ia, row)| {
        let (iax, iay) = (ia % ga.x.n(), ia / ga.x.n());
        let ix = &tx[iax * nox..(iax + 1) * nox];
        let iy = &ty[iay * noy..(iay + 1) * noy];
        // partial[oy][bx] = Σ_ox px[bx][ox] A(ox, oy) Ix(ox) Iy(oy)
        let mut partial = vec![Complex64::new(0.0, 0.0); noy * nbx];
        for oy in 0..noy {
            let a_row = &amp[oy * nox..(oy + 1) * nox];
            let b_row: Vec<(usize, Complex64)> = a_row
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(ox, a)| (ox, a * ix[ox] * iy[oy]))
                .collect();
            if b_row.is_empty() {
                continue;
            }
            for bx in 0..nbx {
                let k_row = &px[bx * nox..(bx + 1) * nox];
                partial[oy * nbx + bx] = b_row.iter().map(|&(ox, v)| k_row[ox] * v).sum();
            }
        }
        for by in 0..nby {
            let k_row = &py[by * noy..(by + 1) * noy];
            for bx in 0..nbx {
                let g: Complex64 = (0..noy).map(|oy| k_row[oy] * partial[oy * nbx + bx]).sum();
                row[by * nbx + bx] = g.norm_sqr();
            }
        }
    });
    out
}

/// Γ at focus (`z_a = z_b`) from the source transform:
/// `Γ(ρa, ρb) = |Σ_o A(ρo) e^{−ik ρo ρb/(z_b M)} F̃(k (ρo − ρa)/z_b) Δo|²`,
/// with `F̃` evaluated directly by [`fourier_profile`] for every (ρo, ρa).
pub fn gamma_focused_closed_form(setup: &OpticalSetup) -> Result<GammaTensor> {
    if setup.z_a != setup.z_b {
        return Err(crate::error::invalid(
            "z_b",
            format!("closed form needs z_a = z_b, got {} and {}", setup.z_a, setup.z_b),
        ));
    }
    setup.check()?;
    let k = setup.k();
    let z = setup.z_b;
    let scale = k / (z * setup.magnification);
    let aperture = sample_object_aperture(&setup.object, &setup.grid_o)?;
    let values = match (&setup.grid_a, &setup.grid_b, &setup.grid_o) {
        (Grid::One(ga), Grid::One(gb), Grid::One(go)) => {
            let f = sample_source_intensity(&setup.source, &setup.grid_s)?;
            let open: Vec<(f64, Complex64)> = go
                .coords()
                .zip(aperture.values())
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(x, a)| (x, *a))
                .collect();
            let nb = gb.n();
            let mut out = vec![0.0; ga.n() * nb];
            out.par_chunks_mut(nb).enumerate().for_each(|(ia, row)| {
                let a = ga.coord(ia);
                let ft: Vec<Complex64> = open
                    .iter()
                    .map(|&(o, _)| fourier_profile(&f, &[k * (o - a) / z]))
                    .collect();
                for (ib, v) in row.iter_mut().enumerate() {
                    let b = gb.coord(ib);
                    let g: Complex64 = open
                        .iter()
                        .zip(&ft)
                        .map(|(&(o, amp), t)| amp * Complex64::from_polar(1.0, -scale * o * b) * t)
                        .sum();
                    *v = (g * go.step()).norm_sqr();
                }
            });
            out
        }
        (Grid::Two(ga), Grid::Two(gb), Grid::Two(go)) => {
            let Grid::Two(gs) = setup.grid_s else {
                return Err(CpiError::Dimension("source grid must be 2-D".into()));
            };
            if !setup.source.is_separable() {
                return Err(CpiError::Unsupported(
                    "2-D closed form needs a separable source profile".into(),
                ));
            }
            let (cx, cy) = setup.source.center();
            let fx = RealField::new(Grid::One(gs.x), setup.source.axis_profile(&gs.x, cx)?)?;
            let fy = RealField::new(Grid::One(gs.y), setup.source.axis_profile(&gs.y, cy)?)?;
            let open: Vec<(f64, f64, Complex64)> = setup
                .grid_o
                .positions()
                .zip(aperture.values())
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|((x, y), a)| (x, y, *a))
                .collect();
            let cell = go.x.step() * go.y.step();
            let nb = gb.len();
            let mut out = vec![0.0; ga.len() * nb];
            out.par_chunks_mut(nb).enumerate().for_each(|(ia, row)| {
                let (ax, ay) = Grid::Two(*ga).position(ia);
                let ft: Vec<Complex64> = open
                    .iter()
                    .map(|&(ox, oy, _)| {
                        fourier_profile(&fx, &[k * (ox - ax) / z])
                            * fourier_profile(&fy, &[k * (oy - ay) / z])
                    })
                    .collect();
                for (ib, v) in row.iter_mut().enumerate() {
                    let (bx, by) = Grid::Two(*gb).position(ib);
                    let g: Complex64 = open
                        .iter()
                        .zip(&ft)
                        .map(|(&(ox, oy, amp), t)| {
                            amp * Complex64::from_polar(1.0, -scale * (ox * bx + oy * by)) * t
                        })
                        .sum();
                    *v = (g * cell).norm_sqr();
                }
            });
            out
        }
        _ => {
            return Err(CpiError::Dimension(
                "all setup grids must share one dimension".into(),
            ))
        }
    };
    finish(setup, Provenance::FocusedClosedForm, values)
}
