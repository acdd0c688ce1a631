//! Run configuration. Frequencies are in Hz here and converted to rad/s on
//! the way in.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::consts::{hz_to_rad, rad_to_hz};
use crate::fit::{OutlierRule, PairWindows};
use crate::noise::{DetectorResponse, NoiseProfile, Notch};
use crate::physics::{libration_modes, LibrationMode, OpticalSetup, RotorModel, TemperatureLaw};
use crate::scenarios::Scenario;
use crate::synth::{Channel, Detection, SidebandOrientation, MIN_TRACE_BINS};
use crate::thermometry::{CFactor, OccupationMethod};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexField {
    pub magnitude: f64,
    /// rad
    #[serde(default)]
    pub phase: f64,
}

impl From<ComplexField> for Complex64 {
    fn from(c: ComplexField) -> Self {
        Complex64::from_polar(c.magnitude, c.phase)
    }
}

impl From<Complex64> for ComplexField {
    fn from(z: Complex64) -> Self {
        Self { magnitude: z.norm(), phase: z.arg() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSection {
    /// V/m
    pub e_tw0: ComplexField,
    /// V/m
    pub e_cav0: ComplexField,
    pub kappa_hz: f64,
    /// Operating point; scans override it per trace.
    pub detuning_hz: f64,
    pub wavelength: f64,
    #[serde(default)]
    pub pol_angle_phi: f64,
    pub n_cav: f64,
    pub finesse: f64,
    pub fsr_hz: f64,
    pub waist_x: f64,
    pub waist_y: f64,
    pub waist_cav: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeHeating {
    /// phonons/s
    pub thermal: f64,
    /// phonons/s
    pub recoil: f64,
    pub intrinsic_linewidth_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatingSection {
    pub alpha: ModeHeating,
    pub beta: ModeHeating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchHz {
    pub center_hz: f64,
    pub depth_db: f64,
    pub width_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub shot_level: f64,
    pub dark_level: f64,
    pub phase_noise_base: f64,
    #[serde(default)]
    pub notches: Vec<NotchHz>,
    pub cavity_noise_center_hz: f64,
    pub cavity_noise_width_hz: f64,
    #[serde(default)]
    pub cavity_noise_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub bins: usize,
}

/// Tabulated relative detector gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseTable {
    pub freq_hz: Vec<f64>,
    pub gain: Vec<f64>,
}

fn default_calibration_averages() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    pub grid: GridSpec,
    pub averages: u64,
    pub seed: u64,
    #[serde(default)]
    pub sideband_orientation: SidebandOrientation,
    pub het_freq_hz: f64,
    /// Sideband area per phonon (shot-normalized PSD·Hz).
    pub area_scale_c: f64,
    pub channels: Vec<Channel>,
    /// Empty means a single trace at `optics.detuning_hz`.
    #[serde(default)]
    pub detunings_hz: Vec<f64>,
    #[serde(default = "default_calibration_averages")]
    pub calibration_averages: u64,
    /// Averages of the particle-free reference written for cavity channels.
    #[serde(default = "default_calibration_averages")]
    pub background_averages: u64,
    #[serde(default)]
    pub noise_free: bool,
    #[serde(default)]
    pub response: Option<ResponseTable>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub windows: PairWindows,
    #[serde(default)]
    pub method: OccupationMethod,
    /// Known area scale for the difference method; calibrated from the traces when absent.
    #[serde(default)]
    pub c: Option<CFactor>,
    #[serde(default)]
    pub outliers: OutlierRule,
    #[serde(default)]
    pub temperature_law: TemperatureLaw,
    #[serde(default = "default_true")]
    pub subtract_background: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            windows: PairWindows::default(),
            method: OccupationMethod::default(),
            c: None,
            outliers: OutlierRule::default(),
            temperature_law: TemperatureLaw::default(),
            subtract_background: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub rotor: RotorModel,
    pub optics: OpticsSection,
    pub heating: HeatingSection,
    pub noise: NoiseSection,
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn bad(field: &str, reason: impl std::fmt::Display) -> IoError {
    IoError::Config(format!("{field}: {reason}"))
}

fn positive(field: &str, v: f64) -> Result<(), IoError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be finite and > 0, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), IoError> {
        self.rotor.validate().map_err(|e| bad("rotor", e))?;
        self.optics().validate().map_err(|e| bad("optics", e))?;
        self.noise().validate().map_err(|e| bad("noise", e))?;
        for (name, h) in [("heating.alpha", self.heating.alpha), ("heating.beta", self.heating.beta)] {
            for v in [h.thermal, h.recoil, h.intrinsic_linewidth_hz] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(bad(name, "rates must be finite and >= 0"));
                }
            }
        }
        let s = &self.synthesis;
        positive("synthesis.grid.start_hz", s.grid.start_hz)?;
        if !(s.grid.stop_hz > s.grid.start_hz) {
            return Err(bad("synthesis.grid.stop_hz", "must exceed start_hz"));
        }
        if s.grid.bins < MIN_TRACE_BINS {
            return Err(bad("synthesis.grid.bins", format!("need at least {MIN_TRACE_BINS}")));
        }
        for (field, v) in [
            ("synthesis.averages", s.averages),
            ("synthesis.calibration_averages", s.calibration_averages),
            ("synthesis.background_averages", s.background_averages),
        ] {
            if v == 0 {
                return Err(bad(field, "must be >= 1"));
            }
        }
        if !(s.het_freq_hz > s.grid.start_hz && s.het_freq_hz < s.grid.stop_hz) {
            return Err(bad("synthesis.het_freq_hz", "must lie inside the grid"));
        }
        positive("synthesis.area_scale_c", s.area_scale_c)?;
        if s.channels.is_empty() {
            return Err(bad("synthesis.channels", "list at least one channel"));
        }
        if let Some(d) = s.detunings_hz.iter().find(|d| !d.is_finite()) {
            return Err(bad("synthesis.detunings_hz", format!("non-finite value {d}")));
        }
        self.detector_response()?;
        if let Some(c) = self.analysis.c {
            positive("analysis.c.value", c.value)?;
            if !(c.err >= 0.0) {
                return Err(bad("analysis.c.err", "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn optics(&self) -> OpticalSetup {
        let o = &self.optics;
        OpticalSetup {
            e_tw0: o.e_tw0.into(),
            e_cav0: o.e_cav0.into(),
            kappa: hz_to_rad(o.kappa_hz),
            detuning: hz_to_rad(o.detuning_hz),
            wavelength: o.wavelength,
            pol_angle_phi: o.pol_angle_phi,
            n_cav: o.n_cav,
            finesse: o.finesse,
            fsr_hz: o.fsr_hz,
            waist_x: o.waist_x,
            waist_y: o.waist_y,
            waist_cav: o.waist_cav,
        }
    }

    pub fn noise(&self) -> NoiseProfile {
        let n = &self.noise;
        NoiseProfile {
            shot_level: n.shot_level,
            dark_level: n.dark_level,
            phase_noise_base: n.phase_noise_base,
            notches: n
                .notches
                .iter()
                .map(|k| Notch { center: hz_to_rad(k.center_hz), depth_db: k.depth_db, width: hz_to_rad(k.width_hz) })
                .collect(),
            cavity_noise_center: hz_to_rad(n.cavity_noise_center_hz),
            cavity_noise_width: hz_to_rad(n.cavity_noise_width_hz),
            cavity_noise_gain: n.cavity_noise_gain,
            seed: self.synthesis.seed,
        }
    }

    /// (thermal, recoil, intrinsic linewidth in rad/s) per mode, alpha first.
    pub fn heating(&self) -> [(f64, f64, f64); 2] {
        [self.heating.alpha, self.heating.beta].map(|h| (h.thermal, h.recoil, hz_to_rad(h.intrinsic_linewidth_hz)))
    }

    pub fn modes(&self) -> Result<[LibrationMode; 2], IoError> {
        libration_modes(&self.rotor, &self.optics(), self.heating()).map_err(|e| bad("rotor/optics", e))
    }

    pub fn detector_response(&self) -> Result<DetectorResponse, IoError> {
        let g = &self.synthesis.grid;
        match &self.synthesis.response {
            None => Ok(DetectorResponse::flat(hz_to_rad(g.start_hz), hz_to_rad(g.stop_hz))),
            Some(t) => DetectorResponse::new(t.freq_hz.iter().map(|&f| hz_to_rad(f)).collect(), t.gain.clone())
                .map_err(|e| bad("synthesis.response", e)),
        }
    }

    pub fn detection(&self) -> Result<Detection, IoError> {
        let s = &self.synthesis;
        Ok(Detection {
            grid_hz: crate::synth::uniform_grid(s.grid.start_hz, s.grid.stop_hz, s.grid.bins),
            averages: s.averages,
            het_freq_hz: s.het_freq_hz,
            orientation: s.sideband_orientation,
            response: self.detector_response()?,
        })
    }

    pub fn detunings_hz(&self) -> Vec<f64> {
        if self.synthesis.detunings_hz.is_empty() {
            vec![self.optics.detuning_hz]
        } else {
            self.synthesis.detunings_hz.clone()
        }
    }

    /// Config reproducing a preset. The grid spans ±1.2 MHz around the
    /// heterodyne frequency with 32768 bins, fine enough for the narrow
    /// far-detuned lines of a scan.
    pub fn from_scenario(s: &Scenario, channels: Vec<Channel>, detunings_hz: Vec<f64>) -> Self {
        // drop the last-digit noise of the rad/s → Hz division
        let rad_to_hz = |w: f64| format!("{:.12e}", rad_to_hz(w)).parse::<f64>().unwrap();
        let o = &s.optics;
        let n = &s.noise;
        let heat = |(thermal, recoil, intrinsic): (f64, f64, f64)| ModeHeating {
            thermal,
            recoil,
            intrinsic_linewidth_hz: rad_to_hz(intrinsic),
        };
        RunConfig {
            name: s.name.to_string(),
            rotor: s.rotor.clone(),
            optics: OpticsSection {
                e_tw0: o.e_tw0.into(),
                e_cav0: o.e_cav0.into(),
                kappa_hz: rad_to_hz(o.kappa),
                detuning_hz: rad_to_hz(o.detuning),
                wavelength: o.wavelength,
                pol_angle_phi: o.pol_angle_phi,
                n_cav: o.n_cav,
                finesse: o.finesse,
                fsr_hz: o.fsr_hz,
                waist_x: o.waist_x,
                waist_y: o.waist_y,
                waist_cav: o.waist_cav,
            },
            heating: HeatingSection { alpha: heat(s.heating[0]), beta: heat(s.heating[1]) },
            noise: NoiseSection {
                shot_level: n.shot_level,
                dark_level: n.dark_level,
                phase_noise_base: n.phase_noise_base,
                notches: n
                    .notches
                    .iter()
                    .map(|k| NotchHz {
                        center_hz: rad_to_hz(k.center),
                        depth_db: k.depth_db,
                        width_hz: rad_to_hz(k.width),
                    })
                    .collect(),
                cavity_noise_center_hz: rad_to_hz(n.cavity_noise_center),
                cavity_noise_width_hz: rad_to_hz(n.cavity_noise_width),
                cavity_noise_gain: n.cavity_noise_gain,
            },
            synthesis: SynthesisSection {
                grid: GridSpec { start_hz: s.het_freq_hz - 1.2e6, stop_hz: s.het_freq_hz + 1.2e6, bins: 32_768 },
                averages: 100,
                seed: n.seed,
                sideband_orientation: SidebandOrientation::StokesAbove,
                het_freq_hz: s.het_freq_hz,
                area_scale_c: s.area_scale_c,
                channels,
                detunings_hz,
                calibration_averages: default_calibration_averages(),
                background_averages: default_calibration_averages(),
                noise_free: false,
                response: None,
            },
            analysis: AnalysisSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ModeLabel;
    use crate::scenarios::{cluster_1d, dumbbell_2d};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn cluster() -> RunConfig {
        RunConfig::from_scenario(&cluster_1d(), vec![Channel::CavityY], vec![1000e3, 1042e3])
    }

    #[test]
    fn round_trip_is_identity() {
        for cfg in [cluster(), RunConfig::from_scenario(&dumbbell_2d(), vec![Channel::CavityZ], vec![])] {
            let text = cfg.to_json();
            let back = RunConfig::from_json(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn boundary_conversion_is_two_pi() {
        let cfg = cluster();
        let o = cfg.optics();
        assert_eq!(o.kappa, TAU * cfg.optics.kappa_hz);
        assert_eq!(o.detuning, TAU * 1042e3);
        assert_eq!(cfg.noise().cavity_noise_center, TAU * cfg.noise.cavity_noise_center_hz);
        assert_eq!(cfg.heating()[0].2, TAU * cfg.heating.alpha.intrinsic_linewidth_hz);
    }

    #[test]
    fn preset_modes_survive_the_boundary() {
        let s = cluster_1d();
        let m = cluster().modes().unwrap();
        let truth = s.mode(ModeLabel::Alpha);
        assert_relative_eq!(m[0].omega, truth.omega, max_relative = 1e-12);
        assert_relative_eq!(m[0].g.norm(), truth.g.norm(), max_relative = 1e-12);
        assert_eq!(cfg_noise_seed(), s.noise.seed);
    }

    fn cfg_noise_seed() -> u64 {
        cluster().noise().seed
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&cluster().to_json()).unwrap();
        v["optics"]["kappa"] = 1.0.into();
        let err = RunConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("unknown field `kappa`"), "{err}");
        let mut v: serde_json::Value = serde_json::from_str(&cluster().to_json()).unwrap();
        v["analysis"]["outliers"]["sigma"] = 3.0.into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn invalid_values_name_the_field() {
        let mut cfg = cluster();
        cfg.noise.dark_level = 2.0;
        assert!(RunConfig::from_json(&cfg.to_json()).unwrap_err().to_string().contains("shot_level"));
        let mut cfg = cluster();
        cfg.synthesis.grid.bins = 4;
        assert!(RunConfig::from_json(&cfg.to_json()).unwrap_err().to_string().contains("synthesis.grid.bins"));
        let mut cfg = cluster();
        cfg.optics.kappa_hz = -1.0;
        assert!(RunConfig::from_json(&cfg.to_json()).unwrap_err().to_string().contains("kappa"));
    }

    #[test]
    fn outlier_clipping_can_be_switched_off() {
        let mut v: serde_json::Value = serde_json::from_str(&cluster().to_json()).unwrap();
        v["analysis"]["outliers"] = serde_json::json!({ "clip_sigma": null });
        let cfg = RunConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.analysis.outliers.clip_sigma, None);
        assert_eq!(cfg.analysis.outliers.max_rounds, 2);
    }
}
