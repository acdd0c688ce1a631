use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use librotor::consts::rad_to_hz;
use librotor::fit::{FittedParam, ScanFitResult};
use librotor::io::{to_results_json, RunConfig, RESULTS_SCHEMA};
use librotor::noise::DetectorResponse;
use librotor::physics::ModeLabel;
use librotor::synth::{Channel, PsdTrace};
use librotor::thermometry::{analyze_scan, calibrate_response, subtract_background, ScanAnalysisConfig, ScanReport};

use crate::files::{load_trace, read_text, write_atomic};
use crate::record::{record_path, Recorder};
use crate::{warn, CliError};

#[derive(Serialize)]
struct Param {
    name: String,
    value: f64,
    err: f64,
}

#[derive(Serialize)]
struct FitSummary {
    params: Vec<Param>,
    reduced_chi2: f64,
    converged: bool,
    excluded_detunings_hz: Vec<f64>,
}

#[derive(Serialize)]
struct Point {
    detuning_hz: f64,
    omega_hz: Option<f64>,
    fwhm_hz: Option<f64>,
    n: Option<f64>,
    n_err: Option<f64>,
    n_raw: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Coldest {
    detuning_hz: f64,
    n: f64,
    n_err: f64,
    ground_state_prob: f64,
    sigma_rad: f64,
    sigma_err_rad: f64,
    temperature_k: f64,
    t_rev_s: f64,
    j_mean: f64,
}

#[derive(Serialize)]
struct ModeSummary {
    mode: ModeLabel,
    channel: Channel,
    status: &'static str,
    error: Option<String>,
    g_hz: Option<f64>,
    g_err_hz: Option<f64>,
    omega_bare_hz: Option<f64>,
    omega_bare_err_hz: Option<f64>,
    gamma_intrinsic_hz: Option<f64>,
    /// phonons/s
    gamma_total_heating: Option<f64>,
    gamma_total_heating_err: Option<f64>,
    gamma_thermal: Option<f64>,
    n_phase: Option<f64>,
    n_phase_err: Option<f64>,
    inertia: Option<f64>,
    inertia_err: Option<f64>,
    c: Option<f64>,
    c_err: Option<f64>,
    c_inconsistent: Option<bool>,
    coldest: Option<Coldest>,
    optimum_detuning_hz: Option<f64>,
    optimum_n: Option<f64>,
    frequency_fit: Option<FitSummary>,
    linewidth_fit: Option<FitSummary>,
    occupation_fit: Option<FitSummary>,
    points: Vec<Point>,
}

#[derive(Serialize)]
struct Results {
    schema: &'static str,
    command: &'static str,
    calibration: &'static str,
    warnings: Vec<String>,
    modes: Vec<ModeSummary>,
}

/// Fitted parameters in rad/s are reported in Hz.
fn param_out(p: &FittedParam) -> Param {
    let hz = matches!(p.name.as_str(), "g" | "omega_bare" | "gamma_intrinsic");
    let k = if hz { rad_to_hz(1.0) } else { 1.0 };
    let name = if hz { format!("{}_hz", p.name) } else { p.name.clone() };
    Param { name, value: p.value * k, err: p.err * k }
}

fn fit_out(f: &ScanFitResult, detunings: &[f64]) -> FitSummary {
    FitSummary {
        params: f.params.iter().map(param_out).collect(),
        reduced_chi2: f.reduced_chi2,
        converged: f.converged,
        excluded_detunings_hz: f.excluded.iter().map(|&i| rad_to_hz(detunings[i])).collect(),
    }
}

fn failed(mode: ModeLabel, channel: Channel, error: String) -> ModeSummary {
    ModeSummary {
        mode,
        channel,
        status: "error",
        error: Some(error),
        g_hz: None,
        g_err_hz: None,
        omega_bare_hz: None,
        omega_bare_err_hz: None,
        gamma_intrinsic_hz: None,
        gamma_total_heating: None,
        gamma_total_heating_err: None,
        gamma_thermal: None,
        n_phase: None,
        n_phase_err: None,
        inertia: None,
        inertia_err: None,
        c: None,
        c_err: None,
        c_inconsistent: None,
        coldest: None,
        optimum_detuning_hz: None,
        optimum_n: None,
        frequency_fit: None,
        linewidth_fit: None,
        occupation_fit: None,
        points: Vec::new(),
    }
}

fn summarize(r: &ScanReport, channel: Channel) -> ModeSummary {
    // detunings (rad/s) of the points that entered each fit, in input order
    let fitted: Vec<f64> =
        r.traces.iter().filter(|t| t.fit.is_some()).map(|t| t.detuning_hz * std::f64::consts::TAU).collect();
    let occupied: Vec<f64> =
        r.traces.iter().filter(|t| t.occupation.is_some()).map(|t| t.detuning_hz * std::f64::consts::TAU).collect();
    let err_of = |f: &ScanFitResult, name: &str| f.param(name).map(|p| p.err);
    let s = &r.coldest.scalars;
    ModeSummary {
        mode: r.mode,
        channel,
        status: "ok",
        error: None,
        g_hz: Some(rad_to_hz(r.linewidth.g_abs)),
        g_err_hz: r.linewidth.g_err().map(rad_to_hz),
        omega_bare_hz: Some(rad_to_hz(r.frequency.omega_bare)),
        omega_bare_err_hz: err_of(&r.frequency, "omega_bare").map(rad_to_hz),
        gamma_intrinsic_hz: r.linewidth.gamma_intrinsic.map(rad_to_hz),
        gamma_total_heating: r.occupation.gamma_total_heating,
        gamma_total_heating_err: err_of(&r.occupation, "gamma_total_heating"),
        gamma_thermal: r.gamma_thermal,
        n_phase: r.occupation.n_phase,
        n_phase_err: err_of(&r.occupation, "n_phase"),
        inertia: Some(r.inertia),
        inertia_err: Some(r.inertia_err),
        c: Some(r.c.c),
        c_err: Some(r.c.c_err),
        c_inconsistent: Some(r.c.inconsistent),
        coldest: Some(Coldest {
            detuning_hz: r.coldest.detuning_hz,
            n: r.coldest.n,
            n_err: r.coldest.n_err,
            ground_state_prob: 1.0 / (r.coldest.n + 1.0),
            sigma_rad: s.sigma,
            sigma_err_rad: r.coldest.sigma_err,
            temperature_k: s.temperature,
            t_rev_s: s.t_rev,
            j_mean: s.j_mean,
        }),
        optimum_detuning_hz: Some(r.optimum_detuning_hz),
        optimum_n: Some(r.optimum_n),
        frequency_fit: Some(fit_out(&r.frequency, &fitted)),
        linewidth_fit: Some(fit_out(&r.linewidth, &fitted)),
        occupation_fit: Some(fit_out(&r.occupation, &occupied)),
        points: r
            .traces
            .iter()
            .map(|t| Point {
                detuning_hz: t.detuning_hz,
                omega_hz: t.fit.as_ref().map(|f| f.omega_hz),
                fwhm_hz: t.fit.as_ref().map(|f| f.fwhm_hz),
                n: t.occupation.as_ref().map(|o| o.n),
                n_err: t.occupation.as_ref().map(|o| o.n_err),
                n_raw: t.occupation.as_ref().map(|o| o.n_raw),
                error: t.error.clone(),
            })
            .collect(),
    }
}

fn sorted_csvs(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.starts_with(prefix) && name.ends_with(".csv")
        })
        .collect();
    out.sort();
    Ok(out)
}

pub fn run(dir: &Path, out: &Path, config: Option<&Path>) -> Result<(), CliError> {
    let mut rec = Recorder::start("scanfit");
    let mut warnings = Vec::new();
    let mut note = |msg: String| {
        warn(&msg);
        warnings.push(msg);
    };

    let cfg = match config {
        Some(p) => {
            rec.input(p);
            RunConfig::from_json(&read_text(p)?)?
        }
        None => {
            let p = dir.join("run.json");
            let record: serde_json::Value =
                serde_json::from_str(&read_text(&p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            let snapshot = record
                .get("config")
                .filter(|c| !c.is_null())
                .ok_or_else(|| CliError::Input(format!("{} carries no config; pass --config", p.display())))?;
            rec.input(&p);
            RunConfig::from_json(&snapshot.to_string())?
        }
    };

    let paths = sorted_csvs(dir, "trace_")?;
    if paths.is_empty() {
        return Err(CliError::Input(format!("no trace_*.csv files in {}", dir.display())));
    }
    let traces: Vec<PsdTrace> = paths.iter().map(|p| load_trace(p)).collect::<Result<_, _>>()?;
    for p in &paths {
        rec.input(p);
    }
    let (shot, dark) = (dir.join("shot.csv"), dir.join("dark.csv"));
    let (response, calibration) = if shot.exists() && dark.exists() {
        let r =
            calibrate_response(&load_trace(&shot)?, &load_trace(&dark)?).map_err(|e| CliError::Input(e.to_string()))?;
        rec.input(&shot);
        rec.input(&dark);
        (r, "shot_dark")
    } else {
        note("no shot.csv/dark.csv in the trace directory; assuming a flat detector response".into());
        let (lo, hi) = traces[0].span_hz();
        (DetectorResponse::flat(std::f64::consts::TAU * lo, std::f64::consts::TAU * hi), "flat")
    };

    let mut by_channel: BTreeMap<Channel, Vec<PsdTrace>> = BTreeMap::new();
    for t in traces {
        by_channel.entry(t.meta.channel).or_default().push(t);
    }
    let modes = cfg.modes()?;
    let optics = cfg.optics();
    let mut summaries = Vec::new();
    for (channel, mut series) in by_channel {
        let bg_path = dir.join(format!("background_{}.csv", channel.as_str()));
        if cfg.analysis.subtract_background && bg_path.exists() {
            let bg = load_trace(&bg_path)?;
            rec.input(&bg_path);
            series = series
                .iter()
                .map(|t| subtract_background(t, &bg, &response))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Input(format!("{}: {e}", bg_path.display())))?;
        }
        series.sort_by(|a, b| a.meta.detuning_hz.total_cmp(&b.meta.detuning_hz));
        for mode in modes.iter().filter(|m| channel.carries(m.label)) {
            let heating = match mode.label {
                ModeLabel::Alpha => cfg.heating.alpha,
                ModeLabel::Beta => cfg.heating.beta,
            };
            let scan_cfg = ScanAnalysisConfig {
                mode: mode.label,
                omega_hint_hz: rad_to_hz(mode.omega),
                windows: cfg.analysis.windows,
                outliers: cfg.analysis.outliers,
                temperature_law: cfg.analysis.temperature_law,
                gamma_recoil: Some(heating.recoil),
            };
            match analyze_scan(&series, &response, &optics, &scan_cfg) {
                Ok(report) => summaries.push(summarize(&report, channel)),
                Err(e) => {
                    warn(format!("{} on {}: {e}", mode.label, channel.as_str()));
                    summaries.push(failed(mode.label, channel, e.to_string()));
                }
            }
        }
    }
    if summaries.is_empty() {
        return Err(CliError::Input("no configured mode is visible on the available channels".into()));
    }

    let failures = summaries.iter().filter(|s| s.status != "ok").count();
    let doc = Results { schema: RESULTS_SCHEMA, command: "scanfit", calibration, warnings, modes: summaries };
    write_atomic(out, to_results_json(&doc)?.as_bytes())?;
    rec.output(out);
    let snapshot = serde_json::to_value(&cfg).expect("config serializes");
    rec.finish(&record_path(out), Some(snapshot), serde_json::json!({ "modes": doc.modes.len(), "failed": failures }))?;
    if failures > 0 {
        return Err(CliError::Analysis(format!("{failures} mode fit(s) failed")));
    }
    Ok(())
}
