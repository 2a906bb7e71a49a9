//! On-disk formats: trace CSVs, JSON configuration and manifests, and the
//! profile and grid tables.
//!
//! Every writer is deterministic. Floats use Rust's shortest round-trip
//! formatting, maps are ordered and nothing records wall-clock time.

pub mod config;
pub mod manifest;
pub mod tables;
pub mod trace;

pub use config::{ExperimentConfig, LayoutSpec, CONFIG_SCHEMA};
pub use manifest::{CalibrationManifest, ConstantsFile, ManifestRun, CONSTANTS_SCHEMA, MANIFEST_SCHEMA};
pub use tables::{read_grid_csv, read_heat_csv, write_grid_csv, write_profile_csv, GRID_SCHEMA, PROFILE_SCHEMA};
pub use trace::{read_trace, read_trace_file, write_trace, write_trace_file, TRACE_SCHEMA};

use std::path::Path;

use crate::error::{Error, Result};

/// Reads a file, naming it in the error.
pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes a file, naming it in the error.
pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// `(key, value, line)` of one `# key=value` header line.
pub(crate) type HeaderEntry = (String, String, usize);

/// Splits `# key=value` header lines from the body of a commented CSV.
pub(crate) fn split_header(text: &str) -> (Vec<HeaderEntry>, Vec<(usize, &str)>) {
    let mut header = Vec::new();
    let mut body = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.push((k.trim().to_string(), v.trim().to_string(), i + 1));
            }
        } else {
            body.push((i + 1, line));
        }
    }
    (header, body)
}
