//! CSV files and the JSON metadata written next to them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Metadata side-file contents. Keys are part of the output schema.
#[derive(Debug, Serialize)]
pub struct Metadata<'a, C: Serialize, O: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    pub config: &'a C,
    pub outputs: &'a O,
    pub files: Vec<String>,
}

pub fn config_hash<C: Serialize>(config: &C) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(config).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// `results.csv` → `results.meta.json`.
pub fn meta_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

/// `results.csv` → `results.<tag>.csv`.
pub fn sibling(out: &Path, tag: &str) -> PathBuf {
    out.with_extension(format!("{tag}.csv"))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn write_metadata<C: Serialize, O: Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    config: &C,
    outputs: &O,
    files: &[&Path],
) -> Result<PathBuf, CliError> {
    let meta = Metadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_hash: config_hash(config)?,
        config,
        outputs,
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = meta_path(out);
    write_with(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &meta).map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(w).map_err(|e| CliError::Runtime(e.to_string()))
    })?;
    Ok(path)
}
