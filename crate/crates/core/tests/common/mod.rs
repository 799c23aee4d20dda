//! Shared setups and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use cpi_core::optics::Grid1D;
use cpi_core::scene::{ObjectModel, OpticalSetup, SourceModel};
use num_complex::Complex64;

pub const LAMBDA: f64 = 500e-9;
pub const SIGMA: f64 = 0.6e-3;
pub const M: f64 = 0.8;
pub const PIXEL: f64 = 32e-6;

pub fn k() -> f64 {
    2.0 * PI / LAMBDA
}

pub fn demo_object() -> ObjectModel {
    ObjectModel::double_slit(100e-6, 400e-6).unwrap()
}

/// 1-D double-slit demonstration geometry: 150 + 150 pixels of 32 µm,
/// z_a = 10 mm, integration grids planned automatically.
pub fn demo(z_b: f64) -> OpticalSetup {
    OpticalSetup::builder(
        LAMBDA,
        10e-3,
        z_b,
        M,
        SourceModel::gaussian(SIGMA).unwrap(),
        demo_object(),
    )
    .pixel_detectors(1, PIXEL, 150, 150)
    .unwrap()
    .pixel_budget(300)
    .build()
    .unwrap()
}

/// Narrow-source 64 x 64 setup at focus used for the Monte Carlo checks.
pub fn small64(z_b: f64, seed: u64) -> OpticalSetup {
    OpticalSetup::builder(
        LAMBDA,
        20e-3,
        z_b,
        M,
        SourceModel::gaussian(60e-6).unwrap(),
        ObjectModel::double_slit(100e-6, 250e-6).unwrap(),
    )
    .detectors(
        Grid1D::new(64, 8e-6, 0.0).unwrap(),
        Grid1D::new(64, 8e-6, 0.0).unwrap(),
    )
    .source_grid(Grid1D::new(181, 3e-6, 0.0).unwrap())
    .object_grid(Grid1D::new(301, 1.5e-6, 0.0).unwrap())
    .seed(seed)
    .build()
    .unwrap()
}

/// Exact source integral for a Gaussian profile `exp(−s²/(2σ²))`:
/// `∫ F(s) e^{i c s²/2} e^{−iκ s} ds = √(2π/α) exp(−κ²/(2α))`, `α = 1/σ² − i c`.
pub fn gaussian_source_integral(sigma: f64, c: f64, kappa: f64) -> Complex64 {
    let alpha = Complex64::new(1.0 / (sigma * sigma), -c);
    (Complex64::new(2.0 * PI, 0.0) / alpha).sqrt() * (-(kappa * kappa) / (2.0 * alpha)).exp()
}

/// Γ(ρa, ρb) with the exact Gaussian source integral and a composite
/// Simpson rule over each open slit interval `[lo, hi]` with `n` panels.
pub fn gamma_gaussian_oracle(
    sigma: f64,
    z_a: f64,
    z_b: f64,
    slits: &[(f64, f64)],
    n: usize,
    rho_a: f64,
    rho_b: f64,
) -> f64 {
    let k = k();
    let c = k * (1.0 / z_b - 1.0 / z_a);
    let integrand = |o: f64| {
        let kappa = k * (o / z_b - rho_a / z_a);
        Complex64::from_polar(1.0, -k * o * rho_b / (z_b * M)) * gaussian_source_integral(sigma, c, kappa)
    };
    let mut total = Complex64::new(0.0, 0.0);
    for &(lo, hi) in slits {
        let h = (hi - lo) / n as f64;
        let mut s = integrand(lo) + integrand(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += integrand(lo + i as f64 * h) * w;
        }
        total += s * h / 3.0;
    }
    total.norm_sqr()
}

/// Error between two tensors after scaling each to unit Frobenius norm.
pub fn frobenius_error(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Intensity-weighted centroid of `values` within `[lo, hi]` on `axis`.
pub fn window_centroid(axis: &Grid1D, values: &[f64], lo: f64, hi: f64) -> f64 {
    let (mut s, mut w) = (0.0, 0.0);
    for (x, v) in axis.coords().zip(values) {
        if x >= lo && x <= hi {
            s += x * v;
            w += v;
        }
    }
    s / w
}

/// Defocused and reference setups for the scaling-residual study: z_a =
/// 100 mm, z_b = 102 mm, double slit of width `λ z_a / (par · D_s)`.
/// The reference records the same object with D_a moved to z_b.
pub fn scaling_pair(par: f64) -> (OpticalSetup, OpticalSetup) {
    let (za, zb) = (100e-3, 102e-3);
    let source = SourceModel::gaussian(SIGMA).unwrap();
    let ds = source.width();
    let a = LAMBDA * za / (par * ds);
    let object = ObjectModel::double_slit(a, 4.0 * a).unwrap();
    let psf = LAMBDA * za / ds;
    let pa = (a * za / zb / 16.0).min(psf);
    let width = 2.0 * (2.5 * a * za / zb + (1.0 - za / zb) * 2.7e-3) + a / 2.0;
    let ga = Grid1D::new((width / pa).ceil() as usize, pa, 0.0).unwrap();
    let gb = Grid1D::new(150, PIXEL, 0.0).unwrap();
    let make = |z_a: f64| {
        OpticalSetup::builder(LAMBDA, z_a, zb, M, source, object.clone())
            .detectors(ga, gb)
            .build()
            .unwrap()
    };
    (make(za), make(zb))
}
