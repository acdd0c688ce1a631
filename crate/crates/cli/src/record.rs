//! Run records: what ran, on which inputs, producing which files.

use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::files::{sha256_file, write_atomic};
use crate::CliError;

pub const RUN_SCHEMA: &str = "librotor-run/1";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub config: Option<serde_json::Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: serde_json::Value,
}

pub struct Recorder {
    command: &'static str,
    started_at: String,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Paths relative to `base` when possible, `/`-separated.
fn display(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

impl Recorder {
    pub fn start(command: &'static str) -> Self {
        Self { command, started_at: now(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Digests every recorded file as it is on disk now and writes the record to `path`.
    pub fn finish(
        self,
        path: &Path,
        config: Option<serde_json::Value>,
        summary: serde_json::Value,
    ) -> Result<(), CliError> {
        let base = path.parent().unwrap_or(Path::new(""));
        let digest = |paths: &[PathBuf]| -> Result<Vec<FileDigest>, CliError> {
            paths.iter().map(|p| Ok(FileDigest { path: display(p, base), sha256: sha256_file(p)? })).collect()
        };
        let record = RunRecord {
            schema: RUN_SCHEMA,
            tool: "librotor",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            started_at: self.started_at,
            finished_at: now(),
            config,
            inputs: digest(&self.inputs)?,
            outputs: digest(&self.outputs)?,
            summary,
        };
        let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// `out/results.json` → `out/results.run.json`.
pub fn record_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.run.json"))
}
