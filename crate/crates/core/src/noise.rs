//! Detection noise floors, laser phase noise with feedback notches, and the
//! detector's relative frequency response.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("invalid noise parameter `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("uncalibrated frequency {omega:.6e} rad/s (response spans {lo:.6e}..{hi:.6e})")]
    UncalibratedFrequency { omega: f64, lo: f64, hi: f64 },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> NoiseError {
    NoiseError::Invalid { field, reason: reason.into() }
}

/// Feedback-induced suppression of laser phase noise around one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Notch {
    /// rad/s
    pub center: f64,
    pub depth_db: f64,
    /// Full width at half depth (rad/s).
    pub width: f64,
}

impl Notch {
    /// Suppression in dB at ω.
    fn suppression_db(&self, omega: f64) -> f64 {
        let x = (omega - self.center) / (0.5 * self.width);
        self.depth_db / (1.0 + x * x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    /// Shot-noise level (PSD units).
    pub shot_level: f64,
    pub dark_level: f64,
    /// Unsuppressed single-sided phase noise (rad²/Hz).
    pub phase_noise_base: f64,
    pub notches: Vec<Notch>,
    /// Offset of the cavity-filtered phase-noise bump from the carrier (rad/s).
    pub cavity_noise_center: f64,
    /// Full width of that bump (rad/s).
    pub cavity_noise_width: f64,
    /// PSD units per rad²/Hz of phase noise at the bump maximum.
    pub cavity_noise_gain: f64,
    pub seed: u64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self {
            shot_level: 1.0,
            dark_level: 0.1,
            phase_noise_base: 1e-9,
            notches: Vec::new(),
            cavity_noise_center: 0.0,
            cavity_noise_width: 1.0,
            cavity_noise_gain: 0.0,
            seed: 0,
        }
    }
}

impl NoiseProfile {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.dark_level >= 0.0) || !self.dark_level.is_finite() {
            return Err(invalid("dark_level", "must be finite and >= 0"));
        }
        if !(self.shot_level > self.dark_level) || !self.shot_level.is_finite() {
            return Err(invalid("shot_level", "must exceed dark_level"));
        }
        if !(self.phase_noise_base >= 0.0) {
            return Err(invalid("phase_noise_base", "must be >= 0"));
        }
        if !(self.cavity_noise_width > 0.0) {
            return Err(invalid("cavity_noise_width", "must be > 0"));
        }
        if !(self.cavity_noise_gain >= 0.0) {
            return Err(invalid("cavity_noise_gain", "must be >= 0"));
        }
        for (i, n) in self.notches.iter().enumerate() {
            if !(n.depth_db >= 0.0) {
                return Err(invalid("notches", format!("notch {i}: depth_db must be >= 0")));
            }
            if !(n.width > 0.0) {
                return Err(invalid("notches", format!("notch {i}: width must be > 0")));
            }
        }
        Ok(())
    }
}

/// Laser phase-noise PSD at ω after feedback. Notch suppressions add in dB.
pub fn phase_noise_psd(profile: &NoiseProfile, omega: f64) -> f64 {
    let db: f64 = profile.notches.iter().map(|n| n.suppression_db(omega)).sum();
    profile.phase_noise_base * 10f64.powf(-db / 10.0)
}

/// Phase noise converted to amplitude noise by the cavity: a Lorentzian bump
/// of full width `cavity_noise_width` around `cavity_noise_center`.
pub fn cavity_noise_background(profile: &NoiseProfile, omega: f64, s_phi: f64) -> f64 {
    let x = (omega - profile.cavity_noise_center) / (0.5 * profile.cavity_noise_width);
    profile.cavity_noise_gain * s_phi / (1.0 + x * x)
}

/// Relative detector sensitivity tabulated on an angular-frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorResponse {
    freq_grid: Vec<f64>,
    gain: Vec<f64>,
}

impl DetectorResponse {
    pub fn new(freq_grid: Vec<f64>, gain: Vec<f64>) -> Result<Self, NoiseError> {
        if freq_grid.len() != gain.len() {
            return Err(invalid("gain", "grid and gain lengths differ"));
        }
        if freq_grid.len() < 2 {
            return Err(invalid("freq_grid", "needs at least two points"));
        }
        if freq_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("freq_grid", "must be strictly increasing"));
        }
        if gain.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(invalid("gain", "must be finite and > 0"));
        }
        Ok(Self { freq_grid, gain })
    }

    /// Unit gain over [lo, hi] (rad/s).
    pub fn flat(lo: f64, hi: f64) -> Self {
        Self { freq_grid: vec![lo, hi], gain: vec![1.0, 1.0] }
    }

    pub fn freq_grid(&self) -> &[f64] {
        &self.freq_grid
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    pub fn span(&self) -> (f64, f64) {
        (self.freq_grid[0], *self.freq_grid.last().unwrap())
    }
}

/// Piecewise-linear interpolation of the detector gain.
pub fn detector_gain(resp: &DetectorResponse, omega: f64) -> Result<f64, NoiseError> {
    let (lo, hi) = resp.span();
    if !(omega >= lo && omega <= hi) {
        return Err(NoiseError::UncalibratedFrequency { omega, lo, hi });
    }
    let grid = &resp.freq_grid;
    let i = grid.partition_point(|&f| f < omega);
    if grid[i] == omega {
        return Ok(resp.gain[i]);
    }
    let (f0, f1) = (grid[i - 1], grid[i]);
    let t = (omega - f0) / (f1 - f0);
    Ok(resp.gain[i - 1] + t * (resp.gain[i] - resp.gain[i - 1]))
}
