use serde::Serialize;
use std::path::Path;

use librotor::geometry::{classify, GeometryClass};
use librotor::io::{parse_damping_csv, to_results_json, RESULTS_SCHEMA};

use crate::files::{read_text, write_atomic};
use crate::record::{record_path, Recorder};
use crate::{warn, CliError};

#[derive(Serialize)]
struct Row {
    line: usize,
    name: Option<String>,
    status: &'static str,
    error: Option<String>,
    #[serde(flatten)]
    class: Option<GeometryClass>,
}

#[derive(Serialize)]
struct Results {
    schema: &'static str,
    command: &'static str,
    rows: Vec<Row>,
}

pub fn run(input: &Path, out: &Path) -> Result<(), CliError> {
    let mut rec = Recorder::start("classify");
    let rows =
        parse_damping_csv(&read_text(input)?).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    rec.input(input);
    let rows: Vec<Row> = rows
        .into_iter()
        .map(|r| match classify(&r.measurement) {
            Ok(c) => Row { line: r.line, name: r.name, status: "ok", error: None, class: Some(c) },
            Err(e) => {
                warn(format!("line {}: {e}", r.line));
                Row { line: r.line, name: r.name, status: "error", error: Some(e.to_string()), class: None }
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let doc = Results { schema: RESULTS_SCHEMA, command: "classify", rows };
    write_atomic(out, to_results_json(&doc)?.as_bytes())?;
    rec.output(out);
    rec.finish(&record_path(out), None, serde_json::json!({ "rows": doc.rows.len(), "failed": failed }))
}
