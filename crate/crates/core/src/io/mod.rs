//! Configuration, artifact formats and the experiment drivers.

pub mod config;
pub mod cpig;
pub mod pgm;
pub mod run;

use std::path::Path;

pub use config::{
    load_config, parse_config, parse_config_in, parse_length, Engine, ExperimentConfig, Exports, Overrides,
};
pub use cpig::{decode_gamma, encode_gamma, read_gamma, write_gamma, CPIG_MAGIC, CPIG_VERSION};
pub use pgm::{encode_pgm, write_pgm};
pub use run::{run_analyze, run_psf, run_refocus, run_simulate, Artifacts, RefocusJob, TOOL_VERSION};

use crate::error::{invalid, Result};

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Caps the global thread pool at `CPI_THREADS` when set. Returns the
/// applied cap; unset or empty means automatic.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var("CPI_THREADS") else {
        return Ok(None);
    };
    if raw.trim().is_empty() {
        return Ok(None);
    }
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| invalid("CPI_THREADS", format!("expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| invalid("CPI_THREADS", e.to_string()))?;
    Ok(Some(n))
}
