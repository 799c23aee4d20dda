use num_complex::Complex64;

use super::tensor::{GammaTensor, Provenance, TensorMeta};
use crate::error::{CpiError, Result};
use crate::optics::{CompensatedSum, ComplexSum};

/// Frames summed in plain floating point before being folded into the
/// compensated totals.
const FLUSH_EVERY: u32 = 256;

#[derive(Debug, Clone, PartialEq)]
struct IntensitySums {
    ia: Vec<CompensatedSum>,
    ib: Vec<CompensatedSum>,
    iaib: Vec<CompensatedSum>,
    pending_ia: Vec<f64>,
    pending_ib: Vec<f64>,
    pending_iaib: Vec<f64>,
}

impl IntensitySums {
    fn new(n_a: usize, n_b: usize) -> Self {
        Self {
            ia: vec![CompensatedSum::default(); n_a],
            ib: vec![CompensatedSum::default(); n_b],
            iaib: vec![CompensatedSum::default(); n_a * n_b],
            pending_ia: vec![0.0; n_a],
            pending_ib: vec![0.0; n_b],
            pending_iaib: vec![0.0; n_a * n_b],
        }
    }

    fn flush(&mut self) {
        fold(&mut self.ia, &mut self.pending_ia);
        fold(&mut self.ib, &mut self.pending_ib);
        fold(&mut self.iaib, &mut self.pending_iaib);
    }
}

fn fold(total: &mut [CompensatedSum], pending: &mut [f64]) {
    for (t, p) in total.iter_mut().zip(pending.iter_mut()) {
        t.add(*p);
        *p = 0.0;
    }
}

/// Running sums over speckle frames of `E_a*(ρa) E_b(ρb)` and, optionally,
/// of the intensities needed for the covariance estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationAccumulator {
    n_a: usize,
    n_b: usize,
    n_frames: u64,
    sum_g: Vec<ComplexSum>,
    pending_g: Vec<Complex64>,
    pending: u32,
    intensity: Option<IntensitySums>,
}

impl CorrelationAccumulator {
    pub fn new(n_a: usize, n_b: usize, track_intensity: bool) -> Self {
        Self {
            n_a,
            n_b,
            n_frames: 0,
            sum_g: vec![ComplexSum::default(); n_a * n_b],
            pending_g: vec![Complex64::new(0.0, 0.0); n_a * n_b],
            pending: 0,
            intensity: track_intensity.then(|| IntensitySums::new(n_a, n_b)),
        }
    }

    pub fn n_frames(&self) -> u64 {
        self.n_frames
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn tracks_intensity(&self) -> bool {
        self.intensity.is_some()
    }

    pub fn add_frame(&mut self, field_a: &[Complex64], field_b: &[Complex64]) -> Result<()> {
        if field_a.len() != self.n_a || field_b.len() != self.n_b {
            return Err(CpiError::Dimension(format!(
                "frame has {}x{} samples, accumulator expects {}x{}",
                field_a.len(),
                field_b.len(),
                self.n_a,
                self.n_b
            )));
        }
        let nb = self.n_b;
        for (ia, ea) in field_a.iter().enumerate() {
            let ca = ea.conj();
            let row = &mut self.pending_g[ia * nb..(ia + 1) * nb];
            for (g, eb) in row.iter_mut().zip(field_b) {
                *g += ca * eb;
            }
        }
        if let Some(s) = &mut self.intensity {
            let ib: Vec<f64> = field_b.iter().map(|e| e.norm_sqr()).collect();
            for (p, i) in s.pending_ib.iter_mut().zip(&ib) {
                *p += i;
            }
            for (ia, ea) in field_a.iter().enumerate() {
                let i_a = ea.norm_sqr();
                s.pending_ia[ia] += i_a;
                let row = &mut s.pending_iaib[ia * nb..(ia + 1) * nb];
                for (p, i) in row.iter_mut().zip(&ib) {
                    *p += i_a * i;
                }
            }
        }
        self.n_frames += 1;
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.flush();
        }
        Ok(())
    }

    fn flush(&mut self) {
        for (t, p) in self.sum_g.iter_mut().zip(self.pending_g.iter_mut()) {
            t.add(*p);
            *p = Complex64::new(0.0, 0.0);
        }
        if let Some(s) = &mut self.intensity {
            s.flush();
        }
        self.pending = 0;
    }

    /// Absorbs `other`; the result equals accumulating both frame streams.
    pub fn merge(&mut self, mut other: CorrelationAccumulator) -> Result<()> {
        if other.n_a != self.n_a || other.n_b != self.n_b {
            return Err(CpiError::Dimension("accumulators cover different grids".into()));
        }
        if other.intensity.is_some() != self.intensity.is_some() {
            return Err(CpiError::Dimension(
                "cannot merge accumulators with and without intensity sums".into(),
            ));
        }
        self.flush();
        other.flush();
        for (a, b) in self.sum_g.iter_mut().zip(&other.sum_g) {
            a.merge(b);
        }
        if let (Some(a), Some(b)) = (&mut self.intensity, &other.intensity) {
            for (x, y) in a.ia.iter_mut().zip(&b.ia) {
                x.merge(y);
            }
            for (x, y) in a.ib.iter_mut().zip(&b.ib) {
                x.merge(y);
            }
            for (x, y) in a.iaib.iter_mut().zip(&b.iaib) {
                x.merge(y);
            }
        }
        self.n_frames += other.n_frames;
        Ok(())
    }

    /// Frame average of `E_a* E_b`, ρa-major.
    pub fn mean_correlation(&self) -> Vec<Complex64> {
        let n = self.n_frames.max(1) as f64;
        self.sum_g
            .iter()
            .zip(&self.pending_g)
            .map(|(s, p)| (s.value() + p) / n)
            .collect()
    }

    /// Frame averages of the intensities on D_a and D_b.
    pub fn mean_intensities(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let s = self.intensity.as_ref()?;
        let n = self.n_frames.max(1) as f64;
        let mean = |t: &[CompensatedSum], p: &[f64]| -> Vec<f64> {
            t.iter().zip(p).map(|(t, p)| (t.value() + p) / n).collect()
        };
        Some((mean(&s.ia, &s.pending_ia), mean(&s.ib, &s.pending_ib)))
    }

    /// Field estimator `|⟨E_a* E_b⟩|²`.
    pub fn field_gamma(&self, meta: TensorMeta) -> Result<GammaTensor> {
        self.check_meta(&meta)?;
        let values = self.mean_correlation().iter().map(|g| g.norm_sqr()).collect();
        GammaTensor::from_raw(meta, values)
    }

    /// Intensity-covariance estimator `⟨I_a I_b⟩ − ⟨I_a⟩⟨I_b⟩`, with negative
    /// fluctuations clipped to zero.
    pub fn covariance_gamma(&self, meta: TensorMeta) -> Result<GammaTensor> {
        self.check_meta(&meta)?;
        let s = self
            .intensity
            .as_ref()
            .ok_or_else(|| CpiError::Unsupported("accumulator was built without intensity sums".into()))?;
        let (ia, ib) = self.mean_intensities().expect("intensity sums present");
        let n = self.n_frames.max(1) as f64;
        let nb = self.n_b;
        let values = s
            .iaib
            .iter()
            .zip(&s.pending_iaib)
            .enumerate()
            .map(|(i, (t, p))| ((t.value() + p) / n - ia[i / nb] * ib[i % nb]).max(0.0))
            .collect();
        GammaTensor::from_raw(meta, values)
    }

    fn check_meta(&self, meta: &TensorMeta) -> Result<()> {
        if meta.grid_a.len() != self.n_a || meta.grid_b.len() != self.n_b {
            return Err(CpiError::Dimension(
                "metadata grids do not match the accumulator".into(),
            ));
        }
        Ok(())
    }
}

/// Provenance tag for a Monte Carlo estimate.
pub fn monte_carlo_provenance(acc: &CorrelationAccumulator, seed: u64) -> Provenance {
    Provenance::MonteCarlo {
        n_frames: acc.n_frames(),
        seed,
    }
}
