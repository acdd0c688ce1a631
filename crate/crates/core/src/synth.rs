//! Forward model for heterodyne power spectral densities: Stokes/anti-Stokes
//! Lorentzian pairs on shot and dark floors, cavity-filtered phase noise, and
//! the detector response, with averaged-periodogram fluctuations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::noise::{
    cavity_noise_background, detector_gain, phase_noise_psd, DetectorResponse, NoiseError, NoiseProfile,
};
use crate::physics::{
    effective_frequency, effective_linewidth, steady_state_occupation, LibrationMode, ModeLabel, OccupationBudget,
    OpticalSetup, PhysicsError,
};

pub const MIN_TRACE_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("sideband at {center_hz:.3} Hz outside analysis band {lo_hz:.3}..{hi_hz:.3} Hz")]
    SidebandOutsideBand { center_hz: f64, lo_hz: f64, hi_hz: f64 },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("averages must be >= 1")]
    NoAverages,
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Detector a trace was recorded on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    BackscatterY,
    CavityY,
    CavityZ,
    SplitX,
    SplitY,
}

impl Channel {
    pub const ALL: [Channel; 5] =
        [Channel::BackscatterY, Channel::CavityY, Channel::CavityZ, Channel::SplitX, Channel::SplitY];

    /// Librations visible on this channel: α on the y-polarized cavity mode,
    /// β on the z-polarized one, both in backscatter.
    pub fn carries(self, label: ModeLabel) -> bool {
        match self {
            Channel::BackscatterY => true,
            Channel::CavityY => label == ModeLabel::Alpha,
            Channel::CavityZ => label == ModeLabel::Beta,
            Channel::SplitX | Channel::SplitY => false,
        }
    }

    /// The libration this channel is dedicated to, if any.
    pub fn dedicated_mode(self) -> Option<ModeLabel> {
        match self {
            Channel::CavityY => Some(ModeLabel::Alpha),
            Channel::CavityZ => Some(ModeLabel::Beta),
            _ => None,
        }
    }

    fn is_cavity(self) -> bool {
        matches!(self, Channel::CavityY | Channel::CavityZ)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::BackscatterY => "backscatter_y",
            Channel::CavityY => "cavity_y",
            Channel::CavityZ => "cavity_z",
            Channel::SplitX => "split_x",
            Channel::SplitY => "split_y",
        }
    }

    /// Position in [`Channel::ALL`]; used to derive noise streams.
    pub fn index(self) -> u64 {
        Channel::ALL.iter().position(|&c| c == self).unwrap() as u64
    }
}

/// Where Stokes photons land relative to the heterodyne frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidebandOrientation {
    /// LO blue of the tweezer: Stokes at ω_het + Ω, anti-Stokes at ω_het − Ω.
    #[default]
    StokesAbove,
    StokesBelow,
}

impl SidebandOrientation {
    pub fn stokes_sign(self) -> f64 {
        match self {
            SidebandOrientation::StokesAbove => 1.0,
            SidebandOrientation::StokesBelow => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub detuning_hz: f64,
    pub het_freq_hz: f64,
    pub averages: u64,
    pub seed: u64,
    pub channel: Channel,
    #[serde(default)]
    pub sideband_orientation: SidebandOrientation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdTrace {
    freq_hz: Vec<f64>,
    values: Vec<f64>,
    pub meta: TraceMeta,
}

impl PsdTrace {
    pub fn new(freq_hz: Vec<f64>, values: Vec<f64>, meta: TraceMeta) -> Result<Self, SynthError> {
        if freq_hz.len() != values.len() {
            return Err(SynthError::InvalidTrace(format!("{} frequencies but {} values", freq_hz.len(), values.len())));
        }
        if freq_hz.len() < MIN_TRACE_BINS {
            return Err(SynthError::InvalidTrace(format!("{} bins, need at least {MIN_TRACE_BINS}", freq_hz.len())));
        }
        if let Some(i) = freq_hz.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SynthError::InvalidTrace(format!("frequency grid not increasing at bin {}", i + 1)));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(SynthError::InvalidTrace(format!("negative or non-finite value at bin {i}")));
        }
        Ok(Self { freq_hz, values, meta })
    }

    pub fn freq_hz(&self) -> &[f64] {
        &self.freq_hz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn span_hz(&self) -> (f64, f64) {
        (self.freq_hz[0], *self.freq_hz.last().unwrap())
    }

    /// Same grid and metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, SynthError> {
        Self::new(self.freq_hz.clone(), values, self.meta.clone())
    }

    /// Bin-wise mean of traces on a shared grid; averages add up.
    pub fn average(traces: &[PsdTrace]) -> Result<Self, SynthError> {
        let first = traces.first().ok_or_else(|| SynthError::InvalidTrace("nothing to average".into()))?;
        if traces.iter().any(|t| t.freq_hz != first.freq_hz) {
            return Err(SynthError::InvalidTrace("traces do not share a frequency grid".into()));
        }
        let k = traces.len() as f64;
        let values = (0..first.len()).map(|i| traces.iter().map(|t| t.values[i]).sum::<f64>() / k).collect();
        let mut meta = first.meta.clone();
        meta.averages = traces.iter().map(|t| t.meta.averages).sum();
        Self::new(first.freq_hz.clone(), values, meta)
    }
}

/// One libration's contribution to a spectrum. The sideband pair sits at the
/// mode's `omega` from the heterodyne frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandSpec {
    pub mode: LibrationMode,
    pub n_true: f64,
    pub area_scale_c: f64,
    /// Full width (rad/s).
    pub linewidth: f64,
}

impl SidebandSpec {
    pub fn stokes_area(&self) -> f64 {
        self.area_scale_c * (self.n_true + 1.0)
    }

    pub fn anti_stokes_area(&self) -> f64 {
        self.area_scale_c * self.n_true
    }
}

/// Detection chain shared by every trace in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub grid_hz: Vec<f64>,
    pub averages: u64,
    pub het_freq_hz: f64,
    pub orientation: SidebandOrientation,
    pub response: DetectorResponse,
}

impl Detection {
    /// Flat detector response over the grid.
    pub fn flat(grid_hz: Vec<f64>, averages: u64, het_freq_hz: f64) -> Self {
        let response = DetectorResponse::flat(TAU * grid_hz[0], TAU * grid_hz[grid_hz.len() - 1]);
        Self { grid_hz, averages, het_freq_hz, orientation: SidebandOrientation::default(), response }
    }
}

pub fn uniform_grid(start_hz: f64, stop_hz: f64, bins: usize) -> Vec<f64> {
    let step = (stop_hz - start_hz) / (bins - 1) as f64;
    (0..bins).map(|i| start_hz + step * i as f64).collect()
}

/// 2048 bins over ω_het ± 1.5 Ω_max.
pub fn default_grid(het_freq_hz: f64, omega_max: f64) -> Vec<f64> {
    let half = 1.5 * omega_max / TAU;
    uniform_grid(het_freq_hz - half, het_freq_hz + half, 2048)
}

/// Area-normalized Lorentzian: (A/π)(w/2)/((f−c)² + (w/2)²).
pub fn lorentzian(f: f64, center: f64, fwhm: f64, area: f64) -> f64 {
    let h = 0.5 * fwhm;
    area / PI * h / ((f - center).powi(2) + h * h)
}

/// Noise-free mean spectrum.
pub fn mean_psd(
    specs: &[SidebandSpec],
    noise: &NoiseProfile,
    detection: &Detection,
    channel: Channel,
) -> Result<Vec<f64>, SynthError> {
    let grid = &detection.grid_hz;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let s = detection.orientation.stokes_sign();
    let het = detection.het_freq_hz;
    let mut lines = Vec::with_capacity(2 * specs.len());
    for spec in specs {
        let offset = spec.mode.omega / TAU;
        let width = spec.linewidth / TAU;
        for (center, area) in [(het + s * offset, spec.stokes_area()), (het - s * offset, spec.anti_stokes_area())] {
            if !(center >= lo && center <= hi) {
                return Err(SynthError::SidebandOutsideBand { center_hz: center, lo_hz: lo, hi_hz: hi });
            }
            lines.push((center, width, area));
        }
    }
    grid.iter()
        .map(|&f| {
            let gain = detector_gain(&detection.response, TAU * f)?;
            let offset = f - het;
            let mut signal = noise.shot_level;
            if channel.is_cavity() && offset * s < 0.0 {
                let w = TAU * offset.abs();
                signal += cavity_noise_background(noise, w, phase_noise_psd(noise, w));
            }
            signal += lines.iter().map(|&(c, w, a)| lorentzian(f, c, w, a)).sum::<f64>();
            Ok(noise.dark_level + gain * signal)
        })
        .collect()
}

fn fluctuate(mean: &[f64], averages: u64, seed: u64, stream: u64) -> Result<Vec<f64>, SynthError> {
    if averages == 0 {
        return Err(SynthError::NoAverages);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let shape = averages as f64;
    Ok(mean.iter().map(|&m| Gamma::new(shape, m / shape).expect("positive mean").sample(&mut rng)).collect())
}

/// Noise-free trace carrying the given metadata.
pub fn mean_trace(
    specs: &[SidebandSpec],
    noise: &NoiseProfile,
    detection: &Detection,
    channel: Channel,
    detuning_hz: f64,
) -> Result<PsdTrace, SynthError> {
    let values = mean_psd(specs, noise, detection, channel)?;
    PsdTrace::new(detection.grid_hz.clone(), values, meta(detection, channel, detuning_hz, noise.seed))
}

fn meta(detection: &Detection, channel: Channel, detuning_hz: f64, seed: u64) -> TraceMeta {
    TraceMeta {
        detuning_hz,
        het_freq_hz: detection.het_freq_hz,
        averages: detection.averages,
        seed,
        channel,
        sideband_orientation: detection.orientation,
    }
}

/// Mean spectrum with Gamma(shape = averages) fluctuations per bin. The
/// generator is seeded from `seed` and `stream`; identical inputs give
/// bit-identical traces.
pub fn synthesize_psd(
    specs: &[SidebandSpec],
    noise: &NoiseProfile,
    detection: &Detection,
    channel: Channel,
    detuning_hz: f64,
    stream: u64,
) -> Result<PsdTrace, SynthError> {
    let mean = mean_psd(specs, noise, detection, channel)?;
    let values = fluctuate(&mean, detection.averages, noise.seed, stream)?;
    PsdTrace::new(detection.grid_hz.clone(), values, meta(detection, channel, detuning_hz, noise.seed))
}

/// Shot-noise (LO only) and dark calibration traces.
pub fn synthesize_calibration(
    noise: &NoiseProfile,
    detection: &Detection,
    stream: u64,
) -> Result<(PsdTrace, PsdTrace), SynthError> {
    let shot_mean = mean_psd(&[], noise, detection, Channel::BackscatterY)?;
    let dark_mean = vec![noise.dark_level.max(f64::MIN_POSITIVE); shot_mean.len()];
    let m = meta(detection, Channel::BackscatterY, 0.0, noise.seed);
    let shot = PsdTrace::new(
        detection.grid_hz.clone(),
        fluctuate(&shot_mean, detection.averages, noise.seed, stream)?,
        m.clone(),
    )?;
    let dark = PsdTrace::new(
        detection.grid_hz.clone(),
        fluctuate(&dark_mean, detection.averages, noise.seed, stream + 1)?,
        m,
    )?;
    Ok((shot, dark))
}

/// Everything a detuning scan shares.
#[derive(Debug, Clone)]
pub struct ScanBase {
    pub modes: Vec<LibrationMode>,
    pub optics: OpticalSetup,
    pub noise: NoiseProfile,
    pub detection: Detection,
    pub area_scale_c: f64,
    pub channel: Channel,
    /// Skip fluctuations and emit mean spectra.
    pub noise_free: bool,
}

/// Generating values for one mode in one scan trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTruth {
    pub label: ModeLabel,
    pub budget: OccupationBudget,
    /// rad/s
    pub linewidth: f64,
    /// Optically shifted frequency (rad/s).
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    pub trace: PsdTrace,
    pub truth: Vec<ModeTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub detuning_hz: f64,
    pub result: Result<ScanTrace, SynthError>,
}

/// Sideband specs for every mode the channel carries at the given drive.
pub fn physics_specs(
    modes: &[LibrationMode],
    optics: &OpticalSetup,
    noise: &NoiseProfile,
    area_scale_c: f64,
    channel: Channel,
) -> Result<(Vec<SidebandSpec>, Vec<ModeTruth>), SynthError> {
    let mut specs = Vec::new();
    let mut truth = Vec::new();
    for mode in modes.iter().filter(|m| channel.carries(m.label)) {
        let budget = steady_state_occupation(mode, optics, phase_noise_psd(noise, mode.omega))?;
        let linewidth = effective_linewidth(mode, optics, mode.omega);
        let center = effective_frequency(mode, optics, mode.omega)?;
        specs.push(SidebandSpec { mode: mode.with_omega(center), n_true: budget.n_total, area_scale_c, linewidth });
        truth.push(ModeTruth { label: mode.label, budget, linewidth, center });
    }
    Ok((specs, truth))
}

/// One trace per detuning with occupations, widths and centers from the
/// cooling model. A detuning without net cooling yields an error entry and the
/// rest of the series is still produced.
pub fn scan_series(base: &ScanBase, detunings_hz: &[f64]) -> Vec<ScanPoint> {
    detunings_hz
        .iter()
        .enumerate()
        .map(|(i, &detuning_hz)| {
            let result = (|| {
                let optics = base.optics.with_detuning(TAU * detuning_hz);
                let (specs, truth) = physics_specs(&base.modes, &optics, &base.noise, base.area_scale_c, base.channel)?;
                let trace = if base.noise_free {
                    mean_trace(&specs, &base.noise, &base.detection, base.channel, detuning_hz)?
                } else {
                    let stream = (i as u64) << 3 | base.channel.index();
                    synthesize_psd(&specs, &base.noise, &base.detection, base.channel, detuning_hz, stream)?
                };
                Ok(ScanTrace { trace, truth })
            })();
            ScanPoint { detuning_hz, result }
        })
        .collect()
}
