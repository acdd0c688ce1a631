use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{
    calibrate_c, fit_trace_pair, occupation_from_areas, CCalibration, CFactor, OccupationResult, SidebandAreas,
    ThermometryError,
};
use crate::fit::{
    fit_occupation_curve, fit_scan_frequency, fit_scan_linewidth, FitError, OccupationModel, OutlierRule, PairFit,
    PairWindows, ScanDatum, ScanFitResult, MIN_SCAN_POINTS,
};
use crate::noise::DetectorResponse;
use crate::physics::{
    derived_scalars, moment_of_inertia_from_coupling, zero_point_amplitude, DerivedScalars, LibrationMode, ModeLabel,
    OpticalSetup, TemperatureLaw,
};
use crate::synth::PsdTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAnalysisConfig {
    pub mode: ModeLabel,
    /// Expected mechanical frequency (Hz) for locating the sidebands.
    pub omega_hint_hz: f64,
    #[serde(default)]
    pub windows: PairWindows,
    #[serde(default)]
    pub outliers: OutlierRule,
    #[serde(default)]
    pub temperature_law: TemperatureLaw,
    /// Recoil share of the heating, for the thermal/recoil split.
    #[serde(default)]
    pub gamma_recoil: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOutcome {
    pub detuning_hz: f64,
    pub occupation: Option<OccupationResult>,
    pub fit: Option<PairFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdestPoint {
    pub detuning_hz: f64,
    pub n: f64,
    pub n_err: f64,
    pub scalars: DerivedScalars,
    pub sigma_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub mode: ModeLabel,
    pub c: CCalibration,
    pub traces: Vec<TraceOutcome>,
    pub frequency: ScanFitResult,
    pub linewidth: ScanFitResult,
    pub occupation: ScanFitResult,
    /// Moment of inertia about the axis governing this mode (kg·m²).
    pub inertia: f64,
    pub inertia_err: f64,
    pub gamma_thermal: Option<f64>,
    pub coldest: ColdestPoint,
    /// Detuning minimizing the fitted occupation curve within the scan.
    pub optimum_detuning_hz: f64,
    pub optimum_n: f64,
}

fn occupation_model(fit: &ScanFitResult, kappa: f64, detuning: f64) -> f64 {
    let hk2 = 0.25 * kappa * kappa;
    let g2k = fit.g_abs * fit.g_abs * kappa;
    let am = g2k / (hk2 + (detuning - fit.omega_bare).powi(2));
    let ap = g2k / (hk2 + (detuning + fit.omega_bare).powi(2));
    (fit.gamma_total_heating.unwrap_or(0.0) + ap) / (am - ap) + fit.n_phase.unwrap_or(0.0)
}

/// Per-trace sideband fits, C calibration, difference-calibrated occupations,
/// then the frequency, linewidth and occupation scan fits and the derived
/// scalars at the coldest point. Needs at least four analyzable traces.
pub fn analyze_scan(
    traces: &[PsdTrace],
    response: &DetectorResponse,
    optics: &OpticalSetup,
    cfg: &ScanAnalysisConfig,
) -> Result<ScanReport, ThermometryError> {
    if traces.len() < MIN_SCAN_POINTS {
        return Err(ThermometryError::TooFewSpectra { need: MIN_SCAN_POINTS, got: traces.len() });
    }
    let fits: Vec<Result<PairFit, ThermometryError>> =
        traces.iter().map(|t| fit_trace_pair(t, response, cfg.omega_hint_hz, cfg.windows)).collect();
    let ok: Vec<SidebandAreas> = fits.iter().flatten().map(SidebandAreas::from_pair).collect();
    if ok.len() < MIN_SCAN_POINTS {
        return Err(FitError::Underdetermined { inliers: ok.len(), need: MIN_SCAN_POINTS }.into());
    }
    let c = calibrate_c(&ok)?;
    let c_factor = CFactor { value: c.c, err: c.c_err };

    let mut outcomes = Vec::with_capacity(traces.len());
    let (mut freq_pts, mut width_pts, mut occ_pts) = (Vec::new(), Vec::new(), Vec::new());
    for (trace, fit) in traces.iter().zip(fits) {
        let detuning_hz = trace.meta.detuning_hz;
        let detuning = TAU * detuning_hz;
        let fit = match fit {
            Ok(f) => f,
            Err(e) => {
                outcomes.push(TraceOutcome { detuning_hz, occupation: None, fit: None, error: Some(e.to_string()) });
                continue;
            }
        };
        let e = fit.errors();
        freq_pts.push(ScanDatum { detuning, value: TAU * fit.omega_hz, err: TAU * e[0] });
        width_pts.push(ScanDatum { detuning, value: TAU * fit.fwhm_hz, err: TAU * e[1] });
        match occupation_from_areas(SidebandAreas::from_pair(&fit), Some(c_factor)) {
            Ok(occ) => {
                occ_pts.push(ScanDatum { detuning, value: occ.n_raw, err: occ.n_err });
                outcomes.push(TraceOutcome { detuning_hz, occupation: Some(occ), fit: Some(fit), error: None });
            }
            Err(err) => outcomes.push(TraceOutcome {
                detuning_hz,
                occupation: None,
                fit: Some(fit),
                error: Some(err.to_string()),
            }),
        }
    }

    let kappa = optics.kappa;
    let frequency = fit_scan_frequency(&freq_pts, kappa, None, cfg.outliers)?;
    let omega_b = frequency.omega_bare;
    let linewidth = fit_scan_linewidth(&width_pts, omega_b, kappa, cfg.outliers)?;
    let g = linewidth.g_abs;
    let occupation = fit_occupation_curve(&occ_pts, OccupationModel { omega: omega_b, kappa, g }, cfg.outliers)?;

    let inertia = moment_of_inertia_from_coupling(g.into(), omega_b, optics, cfg.mode)
        .map_err(|e| ThermometryError::Fit(FitError::InvalidInput(e.to_string())))?;
    let g_rel = linewidth.g_err().unwrap_or(0.0) / g;
    let w_rel = frequency.param("omega_bare").map_or(0.0, |p| p.err) / omega_b;
    let inertia_rel = ((2.0 * g_rel).powi(2) + (3.0 * w_rel).powi(2)).sqrt();

    let coldest = outcomes
        .iter()
        .filter_map(|o| o.occupation.as_ref().map(|occ| (o.detuning_hz, occ)))
        .min_by(|a, b| a.1.n.total_cmp(&b.1.n))
        .expect("at least one occupation");
    let mode = LibrationMode {
        label: cfg.mode,
        omega: omega_b,
        g: g.into(),
        zpf: zero_point_amplitude(inertia, omega_b),
        gamma_thermal: 0.0,
        gamma_recoil: 0.0,
        gamma_intrinsic: linewidth.gamma_intrinsic.unwrap_or(0.0),
    };
    let scalars = derived_scalars(&mode, coldest.1.n, inertia, cfg.temperature_law)
        .map_err(|e| ThermometryError::Fit(FitError::InvalidInput(e.to_string())))?;
    let two_n = 2.0 * coldest.1.n + 1.0;
    let sigma_err = scalars.sigma * ((0.5 * inertia_rel).powi(2) + (coldest.1.n_err / two_n).powi(2)).sqrt();

    // optimum of the fitted curve over the scanned span
    let (lo, hi) = occ_pts.iter().fold((f64::MAX, f64::MIN), |(l, h), p| (l.min(p.detuning), h.max(p.detuning)));
    let steps = 4000;
    let (optimum, optimum_n) = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .map(|d| (d, occupation_model(&occupation, kappa, d)))
        .filter(|(_, n)| n.is_finite() && *n >= 0.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((f64::NAN, f64::NAN));

    Ok(ScanReport {
        mode: cfg.mode,
        c,
        gamma_thermal: cfg.gamma_recoil.and_then(|r| occupation.thermal_heating(r)),
        frequency,
        linewidth,
        occupation,
        inertia,
        inertia_err: inertia * inertia_rel,
        coldest: ColdestPoint { detuning_hz: coldest.0, n: coldest.1.n, n_err: coldest.1.n_err, scalars, sigma_err },
        optimum_detuning_hz: optimum / TAU,
        optimum_n,
        traces: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::cluster_1d;
    use crate::synth::{mean_trace, scan_series, uniform_grid, Channel, Detection, ScanBase};
    use crate::thermometry::subtract_background;
    use approx::assert_relative_eq;

    fn base(noise_free: bool) -> ScanBase {
        let s = cluster_1d();
        ScanBase {
            modes: vec![s.mode(ModeLabel::Alpha)],
            optics: s.optics.clone(),
            noise: s.noise.clone(),
            detection: Detection::flat(uniform_grid(1.3e6, 3.7e6, 32_768), 100, 2.5e6),
            area_scale_c: s.area_scale_c,
            channel: Channel::CavityY,
            noise_free,
        }
    }

    fn cfg() -> ScanAnalysisConfig {
        ScanAnalysisConfig {
            mode: ModeLabel::Alpha,
            omega_hint_hz: 1.03e6,
            windows: PairWindows::default(),
            outliers: OutlierRule::default(),
            temperature_law: TemperatureLaw::Bose,
            gamma_recoil: Some(3.2e3),
        }
    }

    fn detunings() -> Vec<f64> {
        (0..12).map(|i| 950e3 + 150e3 * i as f64 / 11.0).collect()
    }

    #[test]
    fn noise_free_scan_inverts_exactly() {
        let b = base(true);
        let bg = mean_trace(&[], &b.noise, &b.detection, b.channel, 0.0).unwrap();
        let traces: Vec<PsdTrace> = scan_series(&b, &detunings())
            .into_iter()
            .map(|p| subtract_background(&p.result.unwrap().trace, &bg, &b.detection.response).unwrap())
            .collect();
        let report = analyze_scan(&traces, &b.detection.response, &b.optics, &cfg()).unwrap();
        let m = &b.modes[0];
        assert_relative_eq!(report.c.c, b.area_scale_c, max_relative = 1e-6);
        assert_relative_eq!(report.frequency.omega_bare, m.omega, max_relative = 1e-6);
        assert_relative_eq!(report.linewidth.g_abs, m.g.norm(), max_relative = 1e-6);
        assert_relative_eq!(report.occupation.gamma_total_heating.unwrap(), m.heating_rate(), max_relative = 1e-6);
        assert_relative_eq!(report.inertia, cluster_1d().rotor.inertia_b, max_relative = 1e-6);
        assert_relative_eq!(report.gamma_thermal.unwrap(), 3.6e3, max_relative = 1e-5);
        assert!(report.traces.iter().all(|t| t.error.is_none()));
    }

    #[test]
    fn too_few_traces_is_an_error() {
        let b = base(true);
        let traces: Vec<PsdTrace> =
            scan_series(&b, &detunings()[..3]).into_iter().map(|p| p.result.unwrap().trace).collect();
        assert!(analyze_scan(&traces, &b.detection.response, &b.optics, &cfg()).is_err());
    }
}
