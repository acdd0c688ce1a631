use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::lm::{fit_curve, LmOptions, Weighting};
use super::FitError;
use crate::synth::PsdTrace;

pub const MIN_WINDOW_BINS: usize = 8;

/// Area-normalized peak on a constant background, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams {
    pub center: f64,
    pub fwhm: f64,
    pub area: f64,
    pub offset: f64,
}

impl LorentzianParams {
    fn to_vec(self) -> Vec<f64> {
        vec![self.center, self.fwhm, self.area, self.offset]
    }

    pub fn eval(&self, f: f64) -> f64 {
        peak(f, self.center, self.fwhm, self.area).0 + self.offset
    }
}

/// Value and (∂c, ∂w, ∂A) of (A/π)(w/2)/((f−c)² + (w/2)²).
pub(crate) fn peak(f: f64, c: f64, w: f64, a: f64) -> (f64, [f64; 3]) {
    let h = 0.5 * w;
    let x = f - c;
    let d = x * x + h * h;
    let value = a / PI * h / d;
    let dc = a * h / PI * 2.0 * x / (d * d);
    let dw = a / (2.0 * PI) * (x * x - h * h) / (d * d);
    let da = h / (PI * d);
    (value, [dc, dw, da])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub linewidth_fwhm: f64,
    pub area: f64,
    pub offset: f64,
    /// Order: center, linewidth, area, offset.
    pub covariance: [[f64; 4]; 4],
    pub converged: bool,
    pub residual_rms: f64,
    pub reduced_chi2: f64,
}

impl LorentzianFit {
    pub fn params(&self) -> LorentzianParams {
        LorentzianParams { center: self.center, fwhm: self.linewidth_fwhm, area: self.area, offset: self.offset }
    }

    pub fn errors(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.covariance[k][k].sqrt())
    }
}

/// Indices of bins inside [lo, hi].
pub(crate) fn window_range(freq: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    freq.partition_point(|&f| f < lo)..freq.partition_point(|&f| f <= hi)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(crate) fn trapz(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Median of the outer eighth of the window on each side (at least two bins).
pub(crate) fn edge_median(values: &[f64]) -> f64 {
    let k = (values.len() / 8).max(2).min(values.len() / 2);
    let mut edges = values[..k].to_vec();
    edges.extend_from_slice(&values[values.len() - k..]);
    median(edges)
}

/// Starting point from the data: highest bin (lower frequency on ties),
/// half-maximum crossings, edge median, and trapezoid area above it.
pub fn guess_lorentzian(freq: &[f64], values: &[f64]) -> LorentzianParams {
    let offset = edge_median(values);
    let imax = values.iter().enumerate().fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let half = offset + 0.5 * (values[imax] - offset);
    let mut l = imax;
    while l > 0 && values[l] > half {
        l -= 1;
    }
    let mut r = imax;
    while r + 1 < values.len() && values[r] > half {
        r += 1;
    }
    let cross = |a: usize, b: usize| {
        let (va, vb) = (values[a], values[b]);
        if va == vb {
            freq[a]
        } else {
            freq[a] + (half - va) / (vb - va) * (freq[b] - freq[a])
        }
    };
    let left = if l < imax { cross(l, l + 1) } else { freq[imax] };
    let right = if r > imax { cross(r - 1, r) } else { freq[imax] };
    let bin = (freq[freq.len() - 1] - freq[0]) / (freq.len() - 1) as f64;
    let fwhm = (right - left).max(bin);
    let above: Vec<f64> = values.iter().map(|v| v - offset).collect();
    let area = trapz(freq, &above);
    LorentzianParams { center: freq[imax], fwhm, area, offset }
}

/// Fits a single Lorentzian on a constant offset. With `averages` the
/// periodogram variance law weights the residuals; otherwise unit weights.
pub fn fit_lorentzian_data(
    freq: &[f64],
    values: &[f64],
    averages: Option<u64>,
    init: Option<LorentzianParams>,
) -> Result<LorentzianFit, FitError> {
    if freq.len() != values.len() {
        return Err(FitError::InvalidInput("frequency and value arrays differ in length".into()));
    }
    if freq.len() < MIN_WINDOW_BINS {
        return Err(FitError::InsufficientData { need: MIN_WINDOW_BINS, got: freq.len() });
    }
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(FitError::InvalidInput("negative PSD value in fit window".into()));
    }
    let init = init.unwrap_or_else(|| guess_lorentzian(freq, values));
    let weighting = match averages {
        Some(n) if n > 0 => Weighting::Periodogram { averages: n },
        _ => Weighting::Unit,
    };
    let model = |p: &[f64], out: &mut [f64], jac: Option<&mut DMatrix<f64>>| {
        if !(p[1] > 0.0) {
            return false;
        }
        match jac {
            Some(j) => {
                for (i, &f) in freq.iter().enumerate() {
                    let (v, d) = peak(f, p[0], p[1], p[2]);
                    out[i] = v + p[3];
                    j[(i, 0)] = d[0];
                    j[(i, 1)] = d[1];
                    j[(i, 2)] = d[2];
                    j[(i, 3)] = 1.0;
                }
            }
            None => {
                for (i, &f) in freq.iter().enumerate() {
                    out[i] = peak(f, p[0], p[1], p[2]).0 + p[3];
                }
            }
        }
        true
    };
    let fit = fit_curve(values, None, &init.to_vec(), weighting, &LmOptions::default(), model)?;
    let reduced_chi2 = fit.reduced_chi2();
    let p = &fit.params;
    Ok(LorentzianFit {
        center: p[0],
        linewidth_fwhm: p[1],
        area: p[2],
        offset: p[3],
        covariance: std::array::from_fn(|i| std::array::from_fn(|j| fit.covariance[(i, j)])),
        converged: fit.converged && p[2] >= 0.0,
        residual_rms: fit.residual_rms,
        reduced_chi2,
    })
}

/// Fits the bins of `trace` inside `window` (Hz).
pub fn fit_lorentzian(
    trace: &PsdTrace,
    window: (f64, f64),
    init: Option<LorentzianParams>,
) -> Result<LorentzianFit, FitError> {
    let range = window_range(trace.freq_hz(), window.0, window.1);
    let (f, v) = (&trace.freq_hz()[range.clone()], &trace.values()[range]);
    fit_lorentzian_data(f, v, Some(trace.meta.averages), init)
}
