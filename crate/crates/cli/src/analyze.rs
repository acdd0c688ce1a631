use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use librotor::fit::{PairFit, PairWindows};
use librotor::io::{to_results_json, RESULTS_SCHEMA};
use librotor::noise::DetectorResponse;
use librotor::synth::{Channel, PsdTrace};
use librotor::thermometry::{
    calibrate_c, calibrate_response, fit_trace_pair, normalize_trace, occupation_from_areas, plot_rows,
    subtract_background, CCalibration, CFactor, OccupationMethod, OccupationResult, SidebandAreas,
};

use crate::files::{load_trace, write_atomic};
use crate::record::{record_path, Recorder};
use crate::{warn, CliError, MethodArg};

pub struct Args {
    pub pattern: String,
    pub calibration: Option<(PathBuf, PathBuf)>,
    pub background: Vec<PathBuf>,
    pub out: PathBuf,
    pub method: MethodArg,
    pub c: Option<CFactor>,
    pub omega_hint_hz: Option<f64>,
}

#[derive(Serialize)]
struct TraceResult {
    file: String,
    channel: Channel,
    detuning_hz: f64,
    status: &'static str,
    error: Option<String>,
    occupation: Option<OccupationResult>,
    fit: Option<PairFit>,
    plot: Option<String>,
}

#[derive(Serialize)]
struct Results {
    schema: &'static str,
    command: &'static str,
    method: OccupationMethod,
    calibration: &'static str,
    c: Option<CCalibration>,
    warnings: Vec<String>,
    traces: Vec<TraceResult>,
}

/// Offset of the strongest gain-corrected bin from the heterodyne frequency.
pub(crate) fn strongest_peak_offset(trace: &PsdTrace, response: &DetectorResponse) -> Result<f64, CliError> {
    let values = normalize_trace(trace, response).map_err(|e| CliError::Analysis(e.to_string()))?;
    let (i, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| CliError::Analysis("empty trace".into()))?;
    Ok((trace.freq_hz()[i] - trace.meta.het_freq_hz).abs())
}

fn name_of(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

fn plot_csv(rows: &[[f64; 4]]) -> String {
    let mut s = String::from("freq_hz,data,fit,residual\n");
    for r in rows {
        writeln!(s, "{:?},{:?},{:?},{:?}", r[0], r[1], r[2], r[3]).unwrap();
    }
    s
}

struct Prepared {
    path: PathBuf,
    trace: PsdTrace,
    fit: Result<PairFit, String>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut rec = Recorder::start("analyze");
    let mut warnings = Vec::new();
    let mut note = |msg: String| {
        warn(&msg);
        warnings.push(msg);
    };

    let explicit: Vec<PathBuf> = args
        .calibration
        .iter()
        .flat_map(|(s, d)| [s.clone(), d.clone()])
        .chain(args.background.iter().cloned())
        .collect();
    let mut paths: Vec<PathBuf> = glob::glob(&args.pattern)
        .map_err(|e| CliError::Input(format!("bad trace pattern: {e}")))?
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    paths.retain(|p| !explicit.contains(p));
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(format!("no trace matches `{}`", args.pattern)));
    }
    let traces: Vec<PsdTrace> = paths.iter().map(|p| load_trace(p)).collect::<Result<_, _>>()?;
    for p in &paths {
        rec.input(p);
    }
    let grid = traces[0].freq_hz();
    if traces.iter().any(|t| t.freq_hz() != grid) {
        return Err(CliError::Input("traces do not share a frequency grid".into()));
    }

    let (response, calibration) = match &args.calibration {
        Some((shot, dark)) => {
            let (s, d) = (load_trace(shot)?, load_trace(dark)?);
            rec.input(shot);
            rec.input(dark);
            if s.freq_hz() != grid {
                return Err(CliError::Input("calibration grid differs from the traces".into()));
            }
            (calibrate_response(&s, &d).map_err(|e| CliError::Input(e.to_string()))?, "shot_dark")
        }
        None => {
            note("no shot/dark calibration given; assuming a flat detector response".into());
            let (lo, hi) = traces[0].span_hz();
            (DetectorResponse::flat(std::f64::consts::TAU * lo, std::f64::consts::TAU * hi), "flat")
        }
    };

    let mut backgrounds: BTreeMap<Channel, PsdTrace> = BTreeMap::new();
    for p in &args.background {
        let bg = load_trace(p)?;
        rec.input(p);
        if bg.freq_hz() != grid {
            return Err(CliError::Input(format!("{}: grid differs from the traces", p.display())));
        }
        backgrounds.insert(bg.meta.channel, bg);
    }

    let mut prepared = Vec::with_capacity(traces.len());
    for (path, trace) in paths.into_iter().zip(traces) {
        let trace = match backgrounds.get(&trace.meta.channel) {
            Some(bg) => subtract_background(&trace, bg, &response).map_err(|e| CliError::Analysis(e.to_string()))?,
            None => trace,
        };
        let hint = match args.omega_hint_hz {
            Some(h) => h,
            None => strongest_peak_offset(&trace, &response)?,
        };
        let fit = fit_trace_pair(&trace, &response, hint, PairWindows::default()).map_err(|e| e.to_string());
        prepared.push(Prepared { path, trace, fit });
    }

    let (c, c_cal) = match (args.method, args.c) {
        (MethodArg::Ratio, _) => (None, None),
        (MethodArg::Diffcal, Some(c)) => (Some(c), None),
        (MethodArg::Diffcal, None) => {
            let areas: Vec<SidebandAreas> =
                prepared.iter().filter_map(|p| p.fit.as_ref().ok()).map(SidebandAreas::from_pair).collect();
            let cal = calibrate_c(&areas).map_err(|e| CliError::Analysis(format!("calibrating C: {e}")))?;
            if cal.inconsistent {
                note(format!("C differences are inconsistent across traces (p = {:.3e})", cal.p_value));
            }
            (Some(CFactor { value: cal.c, err: cal.c_err }), Some(cal))
        }
    };

    let plot_dir = args.out.with_file_name(format!(
        "{}_plots",
        args.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    let mut results = Vec::with_capacity(prepared.len());
    for p in prepared {
        let meta = &p.trace.meta;
        let outcome = p.fit.and_then(|fit| {
            occupation_from_areas(SidebandAreas::from_pair(&fit), c).map(|o| (o, fit)).map_err(|e| e.to_string())
        });
        let result = match outcome {
            Ok((occ, fit)) => {
                let rows = plot_rows(&p.trace, &response, &fit).map_err(|e| CliError::Analysis(e.to_string()))?;
                let stem = p.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let plot_path = plot_dir.join(format!("{stem}.plot.csv"));
                write_atomic(&plot_path, plot_csv(&rows).as_bytes())?;
                rec.output(&plot_path);
                TraceResult {
                    file: name_of(&p.path),
                    channel: meta.channel,
                    detuning_hz: meta.detuning_hz,
                    status: "ok",
                    error: None,
                    occupation: Some(occ),
                    fit: Some(fit),
                    plot: Some(name_of(&plot_path)),
                }
            }
            Err(e) => {
                warn(format!("{}: {e}", p.path.display()));
                TraceResult {
                    file: name_of(&p.path),
                    channel: meta.channel,
                    detuning_hz: meta.detuning_hz,
                    status: "error",
                    error: Some(e),
                    occupation: None,
                    fit: None,
                    plot: None,
                }
            }
        };
        results.push(result);
    }

    let ok = results.iter().filter(|r| r.status == "ok").count();
    let failed = results.len() - ok;
    let doc = Results {
        schema: RESULTS_SCHEMA,
        command: "analyze",
        method: match args.method {
            MethodArg::Ratio => OccupationMethod::Ratio,
            MethodArg::Diffcal => OccupationMethod::DifferenceCalibrated,
        },
        calibration,
        c: c_cal,
        warnings,
        traces: results,
    };
    write_atomic(&args.out, to_results_json(&doc)?.as_bytes())?;
    rec.output(&args.out);
    rec.finish(&record_path(&args.out), None, serde_json::json!({ "ok": ok, "failed": failed }))?;
    if ok == 0 {
        return Err(CliError::Analysis(format!("all {failed} traces failed")));
    }
    Ok(())
}
