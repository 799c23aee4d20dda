//! CPIG binary tensor format, all numbers little-endian:
//!
//! ```text
//! "CPIG"  u16 version  u8 mode (1 = 1-D, 2 = 2-D)
//! per detector (D_a then D_b), per axis: u32 n, f64 step, f64 center
//! f64 z_a  f64 z_b
//! u8 provenance (0 analytic, 1 monte-carlo, 2 closed form, 3 refocused)
//! u64 n_frames  u64 seed           (zero unless monte-carlo)
//! f64 magnification  f64 raw_peak
//! f64 values, row-major, ρa index outermost
//! ```

use std::path::Path;

use crate::correlation::{GammaTensor, Provenance, TensorMeta};
use crate::error::{CpiError, Result};
use crate::optics::{Grid, Grid1D, Grid2D};

pub const CPIG_MAGIC: &[u8; 4] = b"CPIG";
pub const CPIG_VERSION: u16 = 1;

pub fn encode_gamma(gamma: &GammaTensor) -> Vec<u8> {
    let mode = gamma.grid_a().dims() as u8;
    let mut out = Vec::with_capacity(128 + 8 * gamma.values().len());
    out.extend_from_slice(CPIG_MAGIC);
    out.extend_from_slice(&CPIG_VERSION.to_le_bytes());
    out.push(mode);
    for grid in [gamma.grid_a(), gamma.grid_b()] {
        for axis in grid.axes() {
            out.extend_from_slice(&(axis.n() as u32).to_le_bytes());
            out.extend_from_slice(&axis.step().to_le_bytes());
            out.extend_from_slice(&axis.center().to_le_bytes());
        }
    }
    out.extend_from_slice(&gamma.z_a().to_le_bytes());
    out.extend_from_slice(&gamma.z_b().to_le_bytes());
    let (tag, n_frames, seed) = match gamma.provenance() {
        Provenance::Analytic => (0u8, 0u64, 0u64),
        Provenance::MonteCarlo { n_frames, seed } => (1, n_frames, seed),
        Provenance::FocusedClosedForm => (2, 0, 0),
        Provenance::Refocused => (3, 0, 0),
    };
    out.push(tag);
    out.extend_from_slice(&n_frames.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&gamma.magnification().to_le_bytes());
    out.extend_from_slice(&gamma.raw_peak().to_le_bytes());
    for v in gamma.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                CpiError::Format(format!(
                    "truncated CPIG data: need {n} bytes for {what} at offset {}, {} available",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_gamma(bytes: &[u8]) -> Result<GammaTensor> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CPIG_MAGIC {
        return Err(CpiError::Format("not a CPIG file (bad magic)".into()));
    }
    let version = r.u16("version")?;
    if version != CPIG_VERSION {
        return Err(CpiError::Format(format!(
            "unsupported CPIG version {version} (expected {CPIG_VERSION})"
        )));
    }
    let mode = r.u8("mode")?;
    if !(1..=2).contains(&mode) {
        return Err(CpiError::Format(format!("invalid CPIG mode {mode}")));
    }
    let mut grids = Vec::with_capacity(2);
    for name in ["D_a", "D_b"] {
        let mut axes = Vec::with_capacity(mode as usize);
        for _ in 0..mode {
            let n = r.u32(name)? as usize;
            let step = r.f64(name)?;
            let center = r.f64(name)?;
            axes.push(
                Grid1D::new(n, step, center).map_err(|e| CpiError::Format(format!("{name} axis: {e}")))?,
            );
        }
        grids.push(match axes[..] {
            [x] => Grid::One(x),
            [x, y] => Grid::Two(Grid2D::new(x, y)),
            _ => unreachable!(),
        });
    }
    let z_a = r.f64("z_a")?;
    let z_b = r.f64("z_b")?;
    let tag = r.u8("provenance")?;
    let n_frames = r.u64("frame count")?;
    let seed = r.u64("seed")?;
    let provenance = match tag {
        0 => Provenance::Analytic,
        1 => Provenance::MonteCarlo { n_frames, seed },
        2 => Provenance::FocusedClosedForm,
        3 => Provenance::Refocused,
        other => return Err(CpiError::Format(format!("unknown provenance tag {other}"))),
    };
    let magnification = r.f64("magnification")?;
    let raw_peak = r.f64("raw peak")?;
    let count = grids[0]
        .len()
        .checked_mul(grids[1].len())
        .ok_or_else(|| CpiError::Format("tensor size overflows".into()))?;
    let body = r.take(
        count
            .checked_mul(8)
            .ok_or_else(|| CpiError::Format("tensor size overflows".into()))?,
        "values",
    )?;
    if r.pos != bytes.len() {
        return Err(CpiError::Format(format!(
            "{} trailing bytes after CPIG values",
            bytes.len() - r.pos
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let meta = TensorMeta {
        grid_a: grids[0],
        grid_b: grids[1],
        z_a,
        z_b,
        magnification,
        provenance,
    };
    GammaTensor::from_normalized(meta, values, raw_peak)
        .map_err(|e| CpiError::Format(format!("invalid CPIG contents: {e}")))
}

pub fn write_gamma(path: &Path, gamma: &GammaTensor) -> Result<()> {
    super::write_atomic(path, &encode_gamma(gamma))
}

pub fn read_gamma(path: &Path) -> Result<GammaTensor> {
    decode_gamma(&std::fs::read(path)?)
}
