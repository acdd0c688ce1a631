use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

use librotor::io::{format_psd_csv, read_trace, sidecar_path};
use librotor::synth::PsdTrace;

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| io_err(path, e))?))
}

/// Writes `<dir>/<name>.csv` and its sidecar; returns both paths.
pub fn write_trace(dir: &Path, name: &str, trace: &PsdTrace) -> Result<[PathBuf; 2], CliError> {
    let csv = dir.join(format!("{name}.csv"));
    let side = sidecar_path(&csv);
    write_atomic(&csv, format_psd_csv(trace).as_bytes())?;
    let mut meta = serde_json::to_string_pretty(&trace.meta).expect("meta serializes");
    meta.push('\n');
    write_atomic(&side, meta.as_bytes())?;
    Ok([csv, side])
}

pub fn load_trace(path: &Path) -> Result<PsdTrace, CliError> {
    Ok(read_trace(path)?)
}
