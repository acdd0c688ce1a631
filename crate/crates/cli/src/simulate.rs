use serde::Serialize;
use std::path::Path;

use librotor::consts::rad_to_hz;
use librotor::io::{to_results_json, RunConfig, RESULTS_SCHEMA};
use librotor::physics::ModeLabel;
use librotor::synth::{
    mean_trace, scan_series, synthesize_calibration, synthesize_psd, Channel, Detection, PsdTrace, ScanBase,
};

use crate::files::{read_text, write_atomic, write_trace};
use crate::record::Recorder;
use crate::{warn, CliError};

/// Noise streams outside the range used by scan traces (index << 3 | channel).
const CALIBRATION_STREAM: u64 = u64::MAX - 1;
const BACKGROUND_STREAM: u64 = 1 << 62;

#[derive(Serialize)]
struct ModeTruthOut {
    mode: ModeLabel,
    n_true: f64,
    n_phase: f64,
    linewidth_hz: f64,
    center_hz: f64,
    a_plus: f64,
    a_minus: f64,
}

#[derive(Serialize)]
struct TraceTruth {
    file: String,
    channel: Channel,
    detuning_hz: f64,
    modes: Vec<ModeTruthOut>,
}

#[derive(Serialize)]
struct InvalidTrace {
    channel: Channel,
    detuning_hz: f64,
    reason: String,
}

#[derive(Serialize)]
struct Truth {
    schema: &'static str,
    area_scale_c: f64,
    traces: Vec<TraceTruth>,
    invalid: Vec<InvalidTrace>,
}

fn particle_free(cfg: &RunConfig, det: &Detection, channel: Channel, stream: u64) -> Result<PsdTrace, CliError> {
    let noise = cfg.noise();
    let t = if cfg.synthesis.noise_free {
        mean_trace(&[], &noise, det, channel, 0.0)
    } else {
        synthesize_psd(&[], &noise, det, channel, 0.0, stream)
    };
    t.map_err(|e| CliError::Analysis(e.to_string()))
}

fn calibration(cfg: &RunConfig, det: &Detection) -> Result<(PsdTrace, PsdTrace), CliError> {
    let noise = cfg.noise();
    if cfg.synthesis.noise_free {
        let shot = particle_free(cfg, det, Channel::BackscatterY, 0)?;
        let dark_level = noise.dark_level.max(f64::MIN_POSITIVE);
        let dark = shot.with_values(vec![dark_level; shot.len()]).map_err(|e| CliError::Analysis(e.to_string()))?;
        return Ok((shot, dark));
    }
    synthesize_calibration(&noise, det, CALIBRATION_STREAM).map_err(|e| CliError::Analysis(e.to_string()))
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut rec = Recorder::start("simulate");
    let mut cfg = RunConfig::from_json(&read_text(config)?)?;
    rec.input(config);
    if let Some(seed) = seed {
        cfg.synthesis.seed = seed;
    }
    let modes = cfg.modes()?;
    let detection = cfg.detection()?;
    let detunings = cfg.detunings_hz();
    let width = detunings.len().saturating_sub(1).to_string().len().max(2);

    let mut truth = Truth {
        schema: RESULTS_SCHEMA,
        area_scale_c: cfg.synthesis.area_scale_c,
        traces: Vec::new(),
        invalid: Vec::new(),
    };
    for &channel in &cfg.synthesis.channels {
        let base = ScanBase {
            modes: modes.to_vec(),
            optics: cfg.optics(),
            noise: cfg.noise(),
            detection: detection.clone(),
            area_scale_c: cfg.synthesis.area_scale_c,
            channel,
            noise_free: cfg.synthesis.noise_free,
        };
        for (i, point) in scan_series(&base, &detunings).into_iter().enumerate() {
            match point.result {
                Ok(st) => {
                    let name = format!("trace_{}_{i:0width$}", channel.as_str());
                    for p in write_trace(out, &name, &st.trace)? {
                        rec.output(p);
                    }
                    truth.traces.push(TraceTruth {
                        file: format!("{name}.csv"),
                        channel,
                        detuning_hz: point.detuning_hz,
                        modes: st
                            .truth
                            .iter()
                            .map(|m| ModeTruthOut {
                                mode: m.label,
                                n_true: m.budget.n_total,
                                n_phase: m.budget.n_phase,
                                linewidth_hz: rad_to_hz(m.linewidth),
                                center_hz: rad_to_hz(m.center),
                                a_plus: m.budget.a_plus,
                                a_minus: m.budget.a_minus,
                            })
                            .collect(),
                    });
                }
                Err(e) => {
                    warn(format!("{} trace at detuning {} Hz is invalid: {e}", channel.as_str(), point.detuning_hz));
                    truth.invalid.push(InvalidTrace { channel, detuning_hz: point.detuning_hz, reason: e.to_string() });
                }
            }
        }
    }

    let mut cal_det = detection.clone();
    cal_det.averages = cfg.synthesis.calibration_averages;
    let (shot, dark) = calibration(&cfg, &cal_det)?;
    for p in write_trace(out, "shot", &shot)?.into_iter().chain(write_trace(out, "dark", &dark)?) {
        rec.output(p);
    }
    let mut bg_det = detection.clone();
    bg_det.averages = cfg.synthesis.background_averages;
    for &channel in cfg.synthesis.channels.iter().filter(|c| matches!(c, Channel::CavityY | Channel::CavityZ)) {
        let bg = particle_free(&cfg, &bg_det, channel, BACKGROUND_STREAM | channel.index())?;
        for p in write_trace(out, &format!("background_{}", channel.as_str()), &bg)? {
            rec.output(p);
        }
    }

    let truth_path = out.join("truth.json");
    write_atomic(&truth_path, to_results_json(&truth)?.as_bytes())?;
    rec.output(&truth_path);

    let summary = serde_json::json!({
        "traces": truth.traces.len(),
        "invalid": truth.invalid.len(),
        "seed": cfg.synthesis.seed,
    });
    let snapshot = serde_json::to_value(&cfg).expect("config serializes");
    rec.finish(&out.join("run.json"), Some(snapshot), summary)?;
    if truth.traces.is_empty() {
        return Err(CliError::Analysis("no valid trace could be synthesized".into()));
    }
    Ok(())
}
