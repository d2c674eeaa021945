//! Experiment orchestration: coverage runs, training sweeps, metrics,
//! probability traces, SVG figures, result files and the command line.

pub mod cli;
pub mod config;
pub mod coverage;
pub mod eval;
pub mod metrics;
pub mod output;
pub mod svg;
pub mod trace;

use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "SNAP_OUT_DIR";

/// Output root: `SNAP_OUT_DIR` if set, otherwise `results`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// reader never sees a partial file. Parent directories are created.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
