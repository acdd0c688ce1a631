//! Joint fit of a Stokes/anti-Stokes pair: one mechanical frequency and
//! linewidth shared by both lines, an area and a local offset per sideband.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{fit_curve, LmOptions, Weighting};
use super::lorentzian::{edge_median, guess_lorentzian, peak, trapz, window_range, MIN_WINDOW_BINS};
use super::FitError;
use crate::synth::SidebandOrientation;

/// Where the pair sits and how the data were averaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairLayout {
    pub het_freq_hz: f64,
    pub orientation: SidebandOrientation,
    /// 0 when unknown.
    pub averages: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairWindows {
    /// Half-width of each sideband window; derived from the peak width when unset.
    pub half_width_hz: Option<f64>,
    /// How far from the hint the Stokes peak is searched; 5% of the hint when unset.
    pub search_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    /// Mechanical frequency: distance of each line from the heterodyne frequency.
    pub omega_hz: f64,
    pub fwhm_hz: f64,
    pub stokes_area: f64,
    pub anti_stokes_area: f64,
    pub stokes_offset: f64,
    pub anti_stokes_offset: f64,
    /// Order: omega, fwhm, stokes area, anti-Stokes area, stokes offset, anti-Stokes offset.
    pub covariance: [[f64; 6]; 6],
    pub converged: bool,
    pub residual_rms: f64,
    pub reduced_chi2: f64,
    pub half_window_hz: f64,
    pub stokes_center_hz: f64,
    pub anti_stokes_center_hz: f64,
}

impl PairFit {
    pub fn errors(&self) -> [f64; 6] {
        std::array::from_fn(|k| self.covariance[k][k].sqrt())
    }

    /// Model value at `f` inside either window.
    pub fn eval(&self, f: f64) -> f64 {
        let ds = (f - self.stokes_center_hz).abs();
        let da = (f - self.anti_stokes_center_hz).abs();
        if ds <= da {
            self.stokes_offset + peak(f, self.stokes_center_hz, self.fwhm_hz, self.stokes_area).0
        } else {
            self.anti_stokes_offset + peak(f, self.anti_stokes_center_hz, self.fwhm_hz, self.anti_stokes_area).0
        }
    }

    /// Bins covered by the two windows, Stokes first.
    pub fn window_bins(&self, freq: &[f64]) -> Vec<usize> {
        let h = self.half_window_hz;
        let mut idx: Vec<usize> = window_range(freq, self.stokes_center_hz - h, self.stokes_center_hz + h).collect();
        idx.extend(window_range(freq, self.anti_stokes_center_hz - h, self.anti_stokes_center_hz + h));
        idx
    }
}

fn moving_average3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Fits the sideband pair of the mode expected near `omega_hint_hz` from the
/// heterodyne frequency.
pub fn fit_sideband_pair(
    freq: &[f64],
    values: &[f64],
    layout: PairLayout,
    omega_hint_hz: f64,
    windows: PairWindows,
) -> Result<PairFit, FitError> {
    if freq.len() != values.len() {
        return Err(FitError::InvalidInput("frequency and value arrays differ in length".into()));
    }
    if !(omega_hint_hz > 0.0) {
        return Err(FitError::InvalidInput(format!("mode frequency hint must be > 0, got {omega_hint_hz}")));
    }
    let s = layout.orientation.stokes_sign();
    let het = layout.het_freq_hz;
    let (lo, hi) = (freq[0], freq[freq.len() - 1]);
    for c in [het + s * omega_hint_hz, het - s * omega_hint_hz] {
        if !(c > lo && c < hi) {
            return Err(FitError::InvalidInput(format!("sideband near {c:.1} Hz outside trace span")));
        }
    }

    // locate the Stokes line and estimate its width on a lightly smoothed copy
    let search = windows.search_hz.unwrap_or(0.05 * omega_hint_hz);
    let stokes_hint = het + s * omega_hint_hz;
    let r = window_range(freq, stokes_hint - search, stokes_hint + search);
    if r.len() < MIN_WINDOW_BINS {
        return Err(FitError::InsufficientData { need: MIN_WINDOW_BINS, got: r.len() });
    }
    let smooth = moving_average3(&values[r.clone()]);
    let g = guess_lorentzian(&freq[r.clone()], &smooth);
    let omega0 = s * (g.center - het);
    let bin = (hi - lo) / (freq.len() - 1) as f64;
    let half = windows.half_width_hz.unwrap_or_else(|| (20.0 * g.fwhm).clamp(5.0 * bin, 0.45 * omega0.abs()));

    let sr = window_range(freq, het + s * omega0 - half, het + s * omega0 + half);
    let ar = window_range(freq, het - s * omega0 - half, het - s * omega0 + half);
    for r in [&sr, &ar] {
        if r.len() < MIN_WINDOW_BINS {
            return Err(FitError::InsufficientData { need: MIN_WINDOW_BINS, got: r.len() });
        }
    }
    let n_s = sr.len();
    let f: Vec<f64> = freq[sr.clone()].iter().chain(&freq[ar.clone()]).copied().collect();
    let y: Vec<f64> = values[sr.clone()].iter().chain(&values[ar.clone()]).copied().collect();
    if y.iter().any(|v| !(*v >= 0.0)) {
        return Err(FitError::InvalidInput("negative PSD value in fit window".into()));
    }

    let off_s = edge_median(&values[sr.clone()]);
    let off_a = edge_median(&values[ar.clone()]);
    let area = |r: std::ops::Range<usize>, off: f64| {
        let above: Vec<f64> = values[r.clone()].iter().map(|v| v - off).collect();
        trapz(&freq[r], &above)
    };
    let a_s = area(sr, off_s).max(0.0);
    let a_a = area(ar, off_a).clamp(0.0, a_s);
    let p0 = [omega0, g.fwhm, a_s, a_a, off_s, off_a];

    let model = |p: &[f64], out: &mut [f64], jac: Option<&mut DMatrix<f64>>| {
        if !(p[1] > 0.0) {
            return false;
        }
        let (cs, ca) = (het + s * p[0], het - s * p[0]);
        let mut jac = jac;
        for (i, &fi) in f.iter().enumerate() {
            let stokes = i < n_s;
            let (c, a, off) = if stokes { (cs, p[2], p[4]) } else { (ca, p[3], p[5]) };
            let (v, d) = peak(fi, c, p[1], a);
            out[i] = v + off;
            if let Some(j) = jac.as_deref_mut() {
                let sign = if stokes { s } else { -s };
                j[(i, 0)] = sign * d[0];
                j[(i, 1)] = d[1];
                j[(i, 2)] = if stokes { d[2] } else { 0.0 };
                j[(i, 3)] = if stokes { 0.0 } else { d[2] };
                j[(i, 4)] = if stokes { 1.0 } else { 0.0 };
                j[(i, 5)] = if stokes { 0.0 } else { 1.0 };
            }
        }
        true
    };
    let weighting =
        if layout.averages > 0 { Weighting::Periodogram { averages: layout.averages } } else { Weighting::Unit };
    let fit = fit_curve(&y, None, &p0, weighting, &LmOptions::default(), model)?;
    let p = &fit.params;
    let omega_hz = p[0];
    Ok(PairFit {
        omega_hz,
        fwhm_hz: p[1],
        stokes_area: p[2],
        anti_stokes_area: p[3],
        stokes_offset: p[4],
        anti_stokes_offset: p[5],
        covariance: std::array::from_fn(|i| std::array::from_fn(|j| fit.covariance[(i, j)])),
        converged: fit.converged,
        residual_rms: fit.residual_rms,
        reduced_chi2: fit.reduced_chi2(),
        half_window_hz: half,
        stokes_center_hz: het + s * omega_hz,
        anti_stokes_center_hz: het - s * omega_hz,
    })
}
