//! Atomic file output and the on-disk layout of a run directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use corrbath::Result;
use serde::Serialize;

pub const CONFIG_COPY: &str = "config.toml";
pub const RESOLVED_CONFIG: &str = "resolved_config.json";
pub const SIMULATE_MANIFEST: &str = "simulate_manifest.json";
pub const ANALYZE_MANIFEST: &str = "manifest.json";
pub const TRACE_DIR: &str = "traces";
pub const DAVIES_DIR: &str = "davies";

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// File name of the trajectory table for one scenario and coupling.
pub fn trace_file(scenario: &str, lambda: f64) -> String {
    format!("{scenario}__lambda_{lambda}.csv")
}

pub fn trace_path(out: &Path, scenario: &str, lambda: f64) -> PathBuf {
    out.join(TRACE_DIR).join(trace_file(scenario, lambda))
}

/// Tool name and version recorded in every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub tool: &'static str,
    pub version: &'static str,
}

pub const VERSIONS: Versions = Versions { tool: "corrbath", version: env!("CARGO_PKG_VERSION") };
