//! File formats: integral dumps, starting-point matrices, problem manifests,
//! trace streams and CSV tables.

pub mod integrals;
pub mod manifest;
pub mod output;
pub mod tables;

use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub use integrals::{format_integrals, parse_integrals, read_integrals, read_matrix, write_integrals};
pub use manifest::{build_problem, BrockettSpec, MetricSpec, Overrides, Problem, ProblemEntry, ProblemManifest};

/// Writes through a sibling temporary file and renames it into place, so
/// readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
