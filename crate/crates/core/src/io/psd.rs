use std::fmt::Write;
use std::path::{Path, PathBuf};

use super::IoError;
use crate::synth::{PsdTrace, TraceMeta};

pub const PSD_HEADER: &str = "# librotor-psd v1";
const COLUMNS: &str = "freq_hz,psd";

pub fn format_psd_csv(trace: &PsdTrace) -> String {
    let mut out = String::with_capacity(32 * trace.len());
    out.push_str(PSD_HEADER);
    out.push('\n');
    out.push_str(COLUMNS);
    out.push('\n');
    for (f, v) in trace.freq_hz().iter().zip(trace.values()) {
        writeln!(out, "{f:?},{v:?}").unwrap();
    }
    out
}

pub fn parse_psd_csv(text: &str, meta: TraceMeta) -> Result<PsdTrace, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l.trim() == PSD_HEADER => {}
        Some((n, l)) => {
            return Err(IoError::Parse { line: n, reason: format!("expected `{PSD_HEADER}`, found `{l}`") })
        }
        None => return Err(IoError::Empty),
    }
    match lines.next() {
        Some((_, l)) if l.trim() == COLUMNS => {}
        Some((n, l)) => return Err(IoError::Parse { line: n, reason: format!("expected `{COLUMNS}`, found `{l}`") }),
        None => return Err(IoError::Empty),
    }
    let (mut freq, mut values) = (Vec::new(), Vec::new());
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let mut num = |what: &str| -> Result<f64, IoError> {
            let cell = cells.next().ok_or_else(|| IoError::Parse { line: n, reason: format!("missing {what}") })?;
            cell.trim()
                .parse::<f64>()
                .map_err(|_| IoError::Parse { line: n, reason: format!("bad {what} `{}`", cell.trim()) })
        };
        let f = num("frequency")?;
        let v = num("psd value")?;
        if cells.next().is_some() {
            return Err(IoError::Parse { line: n, reason: "expected 2 columns".into() });
        }
        freq.push(f);
        values.push(v);
    }
    if freq.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(PsdTrace::new(freq, values, meta)?)
}

/// `dir/name.csv` → `dir/name.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.json"))
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Reads a PSD CSV and its metadata sidecar.
pub fn read_trace(csv: &Path) -> Result<PsdTrace, IoError> {
    let side = sidecar_path(csv);
    let meta: TraceMeta =
        serde_json::from_str(&read(&side)?).map_err(|e| IoError::Config(format!("{}: {e}", side.display())))?;
    parse_psd_csv(&read(csv)?, meta).map_err(|e| match e {
        IoError::Parse { line, reason } => IoError::Parse { line, reason: format!("{}: {reason}", csv.display()) },
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Channel, SidebandOrientation};

    fn meta() -> TraceMeta {
        TraceMeta {
            detuning_hz: 1042e3,
            het_freq_hz: 2.5e6,
            averages: 100,
            seed: 3,
            channel: Channel::CavityY,
            sideband_orientation: SidebandOrientation::StokesAbove,
        }
    }

    fn trace() -> PsdTrace {
        let f: Vec<f64> = (0..20).map(|i| 1.3e6 + 0.1 * i as f64 + 1.0 / 3.0).collect();
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin().abs() * 1e-7 + 1e-300).collect();
        PsdTrace::new(f, v, meta()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let t = trace();
        let text = format_psd_csv(&t);
        assert!(text.starts_with("# librotor-psd v1\nfreq_hz,psd\n"));
        assert!(!text.contains('\r'));
        let back = parse_psd_csv(&text, meta()).unwrap();
        assert_eq!(back, t);
        assert_eq!(format_psd_csv(&back), text);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let mut text = format_psd_csv(&trace());
        text = text.replacen("\n1300000.3333333333,", "\n1300000.3333333333;", 1);
        match parse_psd_csv(&text, meta()) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad = "# librotor-psd v1\nfreq_hz,psd\n1,2\n2,x\n";
        assert!(matches!(parse_psd_csv(bad, meta()), Err(IoError::Parse { line: 4, .. })));
    }

    #[test]
    fn header_is_required() {
        assert!(matches!(parse_psd_csv("freq_hz,psd\n1,2\n", meta()), Err(IoError::Parse { line: 1, .. })));
        assert!(matches!(parse_psd_csv("", meta()), Err(IoError::Empty)));
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(sidecar_path(Path::new("out/trace_cavity_y_03.csv")), Path::new("out/trace_cavity_y_03.meta.json"));
    }
}
