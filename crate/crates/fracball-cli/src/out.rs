//! Artifact output: atomic file writes and the versioned report schema.

use crate::Failure;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// One named gate inside a JSON report.
#[derive(Serialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Gate {
    pub fn leq(name: &str, measured: f64, tolerance: f64, detail: String) -> Gate {
        Gate {
            name: name.into(),
            pass: measured.is_finite() && measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }

    pub fn flag(name: &str, pass: bool, detail: String) -> Gate {
        Gate {
            name: name.into(),
            pass,
            measured: f64::NAN,
            tolerance: f64::NAN,
            detail,
        }
    }
}

/// Write bytes to `path` atomically (temp file in the same directory, then
/// rename), or to stdout when no path is given.
pub fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(p) => {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty());
            let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
            tmp.write_all(bytes)?;
            tmp.persist(p)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize>(path: Option<&PathBuf>, value: &T) -> Result<(), Failure> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Failure::Usage(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    emit(path, &bytes)
}
