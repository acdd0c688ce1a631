//! Sideband-asymmetry thermometry: detector calibration, per-trace sideband
//! areas, the area scale C, and occupations with propagated uncertainties.

mod scan;

pub use scan::{analyze_scan, ColdestPoint, ScanAnalysisConfig, ScanReport, TraceOutcome};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::fit::{fit_sideband_pair, FitError, PairFit, PairLayout, PairWindows};
use crate::noise::{detector_gain, DetectorResponse, NoiseError};
use crate::synth::{PsdTrace, SynthError};

/// Largest tolerated share of bins where shot noise does not exceed dark noise.
pub const MAX_INVALID_FRACTION: f64 = 0.2;
pub const GAIN_MEDIAN_BINS: usize = 5;
/// Below this χ² p-value the C differences are flagged as inconsistent.
pub const C_CONSISTENCY_P: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermometryError {
    #[error("calibration traces inconsistent: {invalid} of {total} bins have shot <= dark")]
    CalibrationInconsistent { invalid: usize, total: usize },
    #[error("traces do not share a frequency grid")]
    GridMismatch,
    #[error("unphysical asymmetry: stokes area {stokes:.6e} <= anti-Stokes area {anti_stokes:.6e}")]
    UnphysicalAsymmetry { stokes: f64, anti_stokes: f64 },
    #[error("anti-Stokes area {area:.6e} is more than 2 sigma ({sigma:.3e}) below zero")]
    NegativeAntiStokes { area: f64, sigma: f64 },
    #[error("occupation {n:.6e} is more than 2 sigma ({sigma:.3e}) below zero")]
    NegativeOccupation { n: f64, sigma: f64 },
    #[error("area scale C must be > 0, got {0}")]
    NonPositiveC(f64),
    #[error("need at least {need} spectra, got {got}")]
    TooFewSpectra { need: usize, got: usize },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupationMethod {
    /// n = A_aS / (A_S − A_aS)
    #[default]
    Ratio,
    /// n = (A_S + A_aS − C) / 2C with C supplied
    DifferenceCalibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandAreas {
    pub stokes: f64,
    pub stokes_err: f64,
    pub anti_stokes: f64,
    pub anti_stokes_err: f64,
    /// cov(A_S, A_aS)
    pub covariance: f64,
}

impl SidebandAreas {
    pub fn from_pair(fit: &PairFit) -> Self {
        let c = &fit.covariance;
        Self {
            stokes: fit.stokes_area,
            stokes_err: c[2][2].sqrt(),
            anti_stokes: fit.anti_stokes_area,
            anti_stokes_err: c[3][3].sqrt(),
            covariance: c[2][3],
        }
    }

    /// A_S − A_aS and its 1σ.
    pub fn difference(&self) -> (f64, f64) {
        let var = self.stokes_err.powi(2) + self.anti_stokes_err.powi(2) - 2.0 * self.covariance;
        (self.stokes - self.anti_stokes, var.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CFactor {
    pub value: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationResult {
    pub n: f64,
    /// Symmetric 1σ of the unclamped estimate.
    pub n_err: f64,
    pub n_err_low: f64,
    pub n_err_high: f64,
    /// Estimate before clamping at zero.
    pub n_raw: f64,
    pub clamped: bool,
    /// Share of `n_err` coming from the C uncertainty.
    pub n_err_from_c: f64,
    pub c_factor: f64,
    pub c_err: f64,
    pub areas: SidebandAreas,
    pub ground_state_prob: f64,
    pub ground_state_prob_err: f64,
    pub method: OccupationMethod,
}

/// Occupation from sideband areas. `c` selects the difference-calibrated
/// method; without it the ratio method is used.
pub fn occupation_from_areas(areas: SidebandAreas, c: Option<CFactor>) -> Result<OccupationResult, ThermometryError> {
    let SidebandAreas { stokes: s, anti_stokes: a, stokes_err: es, anti_stokes_err: ea, covariance: cov } = areas;
    if !(s > a) {
        return Err(ThermometryError::UnphysicalAsymmetry { stokes: s, anti_stokes: a });
    }
    if a < 0.0 && a < -2.0 * ea {
        return Err(ThermometryError::NegativeAntiStokes { area: a, sigma: ea });
    }
    let (n_raw, var_fit, var_c, c_factor, c_err, method) = match c {
        None => {
            let d = s - a;
            let (dn_ds, dn_da) = (-a / (d * d), s / (d * d));
            let var = dn_ds * dn_ds * es * es + dn_da * dn_da * ea * ea + 2.0 * dn_ds * dn_da * cov;
            let (c_val, c_err) = areas.difference();
            (a / d, var, 0.0, c_val, c_err, OccupationMethod::Ratio)
        }
        Some(CFactor { value, err }) => {
            if !(value > 0.0) {
                return Err(ThermometryError::NonPositiveC(value));
            }
            let k = 1.0 / (2.0 * value);
            let var_fit = k * k * (es * es + ea * ea + 2.0 * cov);
            let dn_dc = -(s + a) / (2.0 * value * value);
            let n = (s + a - value) * k;
            (n, var_fit, dn_dc * dn_dc * err * err, value, err, OccupationMethod::DifferenceCalibrated)
        }
    };
    let n_err = (var_fit + var_c).max(0.0).sqrt();
    let (n, clamped) = if n_raw < 0.0 {
        if a >= 0.0 && n_raw < -2.0 * n_err {
            return Err(ThermometryError::NegativeOccupation { n: n_raw, sigma: n_err });
        }
        (0.0, true)
    } else {
        (n_raw, false)
    };
    let n_err_low = if clamped { 0.0 } else { n_err.min(n) };
    let p = 1.0 / (n + 1.0);
    Ok(OccupationResult {
        n,
        n_err,
        n_err_low,
        n_err_high: n_err,
        n_raw,
        clamped,
        n_err_from_c: var_c.sqrt(),
        c_factor,
        c_err,
        areas,
        ground_state_prob: p,
        ground_state_prob_err: n_err * p * p,
        method,
    })
}

fn moving_median(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let mut w = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            let m = w.len();
            if m % 2 == 1 {
                w[m / 2]
            } else {
                0.5 * (w[m / 2 - 1] + w[m / 2])
            }
        })
        .collect()
}

/// Detector gain = shot − dark per bin, 5-bin moving median over valid bins.
/// Bins with shot ≤ dark are dropped and bridged by interpolation.
pub fn calibrate_response(shot: &PsdTrace, dark: &PsdTrace) -> Result<DetectorResponse, ThermometryError> {
    if shot.freq_hz() != dark.freq_hz() {
        return Err(ThermometryError::GridMismatch);
    }
    let (freq, gain): (Vec<f64>, Vec<f64>) = shot
        .freq_hz()
        .iter()
        .zip(shot.values().iter().zip(dark.values()))
        .filter(|(_, (s, d))| s > d)
        .map(|(f, (s, d))| (TAU * f, s - d))
        .unzip();
    let total = shot.len();
    let invalid = total - freq.len();
    if invalid as f64 > MAX_INVALID_FRACTION * total as f64 || freq.len() < 2 {
        return Err(ThermometryError::CalibrationInconsistent { invalid, total });
    }
    Ok(DetectorResponse::new(freq, moving_median(&gain, GAIN_MEDIAN_BINS))?)
}

/// Trace values divided by the detector gain.
pub fn normalize_trace(trace: &PsdTrace, response: &DetectorResponse) -> Result<Vec<f64>, ThermometryError> {
    trace.freq_hz().iter().zip(trace.values()).map(|(f, v)| Ok(v / detector_gain(response, TAU * f)?)).collect()
}

/// Removes a structured background recorded without the particle (e.g. the
/// cavity-filtered phase-noise bump). Only the part of the reference above its
/// median level is subtracted, so the floor under the sidebands stays in place.
pub fn subtract_background(
    trace: &PsdTrace,
    background: &PsdTrace,
    response: &DetectorResponse,
) -> Result<PsdTrace, ThermometryError> {
    if trace.freq_hz() != background.freq_hz() {
        return Err(ThermometryError::GridMismatch);
    }
    let bg = normalize_trace(background, response)?;
    let mut sorted = bg.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    let values = trace
        .freq_hz()
        .iter()
        .zip(trace.values().iter().zip(&bg))
        .map(|(f, (v, b))| Ok((v - (b - floor) * detector_gain(response, TAU * f)?).max(0.0)))
        .collect::<Result<Vec<f64>, ThermometryError>>()?;
    Ok(trace.with_values(values)?)
}

pub fn pair_layout(trace: &PsdTrace) -> PairLayout {
    PairLayout {
        het_freq_hz: trace.meta.het_freq_hz,
        orientation: trace.meta.sideband_orientation,
        averages: trace.meta.averages,
    }
}

/// Gain-corrected sideband-pair fit of one trace.
pub fn fit_trace_pair(
    trace: &PsdTrace,
    response: &DetectorResponse,
    mode_freq_hint_hz: f64,
    windows: PairWindows,
) -> Result<PairFit, ThermometryError> {
    let values = normalize_trace(trace, response)?;
    Ok(fit_sideband_pair(trace.freq_hz(), &values, pair_layout(trace), mode_freq_hint_hz, windows)?)
}

/// Full per-trace pipeline: divide by gain, fit the sideband pair, convert
/// areas to an occupation (ratio method unless C is supplied).
pub fn extract_occupation(
    trace: &PsdTrace,
    response: &DetectorResponse,
    mode_freq_hint_hz: f64,
    c_override: Option<CFactor>,
    windows: PairWindows,
) -> Result<(OccupationResult, PairFit), ThermometryError> {
    let fit = fit_trace_pair(trace, response, mode_freq_hint_hz, windows)?;
    let result = occupation_from_areas(SidebandAreas::from_pair(&fit), c_override)?;
    Ok((result, fit))
}

/// Rows of (frequency, gain-corrected data, model, data − model) over both fit windows.
pub fn plot_rows(
    trace: &PsdTrace,
    response: &DetectorResponse,
    fit: &PairFit,
) -> Result<Vec<[f64; 4]>, ThermometryError> {
    let values = normalize_trace(trace, response)?;
    Ok(fit
        .window_bins(trace.freq_hz())
        .into_iter()
        .map(|i| {
            let f = trace.freq_hz()[i];
            let m = fit.eval(f);
            [f, values[i], m, values[i] - m]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCalibration {
    pub c: f64,
    pub c_err: f64,
    /// Sample standard deviation of the differences.
    pub scatter: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// χ² p-value below the consistency threshold.
    pub inconsistent: bool,
    /// (A_S − A_aS)/C per spectrum.
    pub normalized: Vec<f64>,
}

/// Inverse-variance weighted mean of A_S − A_aS over a series. Without usable
/// variances (noise-free input) the plain mean and its standard error are used.
pub fn calibrate_c(series: &[SidebandAreas]) -> Result<CCalibration, ThermometryError> {
    if series.len() < 2 {
        return Err(ThermometryError::TooFewSpectra { need: 2, got: series.len() });
    }
    let diffs: Vec<(f64, f64)> = series.iter().map(|a| a.difference()).collect();
    let k = diffs.len() as f64;
    let mean = diffs.iter().map(|d| d.0).sum::<f64>() / k;
    let scatter = (diffs.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let weighted = diffs.iter().all(|d| d.1 > 0.0 && d.1.is_finite());
    let (c, c_err) = if weighted {
        let w: f64 = diffs.iter().map(|d| d.1.powi(-2)).sum();
        (diffs.iter().map(|d| d.0 * d.1.powi(-2)).sum::<f64>() / w, w.powf(-0.5))
    } else {
        (mean, scatter / k.sqrt())
    };
    if !(c > 0.0) {
        return Err(ThermometryError::NonPositiveC(c));
    }
    let dof = diffs.len() - 1;
    let (chi2, p_value) = if weighted {
        let chi2: f64 = diffs.iter().map(|d| ((d.0 - c) / d.1).powi(2)).sum();
        let p = ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(f64::NAN);
        (chi2, p)
    } else {
        (0.0, 1.0)
    };
    Ok(CCalibration {
        c,
        c_err,
        scatter,
        chi2,
        dof,
        p_value,
        inconsistent: p_value < C_CONSISTENCY_P,
        normalized: diffs.iter().map(|d| d.0 / c).collect(),
    })
}
