use num_complex::Complex64;

use super::field::RealField;
use super::sum::ComplexSum;

/// Riemann-sum Fourier transform `∫ f(ρ) e^{−iκ·ρ} dρ` at one frequency.
///
/// `kappa` holds one component per grid axis (a 1-D profile uses only
/// `kappa[0]`; missing components are treated as zero).
pub fn fourier_profile(profile: &RealField, kappa: &[f64]) -> Complex64 {
    let kx = kappa.first().copied().unwrap_or(0.0);
    let ky = kappa.get(1).copied().unwrap_or(0.0);
    let grid = profile.grid();
    let mut acc = ComplexSum::default();
    for (i, &f) in profile.values().iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        let (x, y) = grid.position(i);
        acc.add(Complex64::from_polar(f, -(kx * x + ky * y)));
    }
    acc.value() * grid.cell()
}
