//! Particle geometry from the anisotropy of translational gas damping.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("damping rate {axis} must be > 0, got {value}")]
    NonPositiveRate { axis: &'static str, value: f64 },
    #[error("damping error {axis} must be finite and >= 0, got {value}")]
    InvalidError { axis: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingMeasurement {
    pub gamma_x: f64,
    pub gamma_x_err: f64,
    pub gamma_y: f64,
    pub gamma_y_err: f64,
    #[serde(default)]
    pub pressure_mbar: Option<f64>,
}

impl DampingMeasurement {
    pub fn new(gamma_x: f64, gamma_x_err: f64, gamma_y: f64, gamma_y_err: f64) -> Self {
        Self { gamma_x, gamma_x_err, gamma_y, gamma_y_err, pressure_mbar: None }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        for (axis, v) in [("gamma_x", self.gamma_x), ("gamma_y", self.gamma_y)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GeometryError::NonPositiveRate { axis, value: v });
            }
        }
        for (axis, v) in [("gamma_x_err", self.gamma_x_err), ("gamma_y_err", self.gamma_y_err)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(GeometryError::InvalidError { axis, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryLabel {
    Sphere,
    Dumbbell,
    Trimer,
    Unclassified,
}

impl GeometryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GeometryLabel::Sphere => "sphere",
            GeometryLabel::Dumbbell => "dumbbell",
            GeometryLabel::Trimer => "trimer",
            GeometryLabel::Unclassified => "unclassified",
        }
    }
}

/// Reference range of γ_y/γ_x for one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBand {
    pub label: GeometryLabel,
    pub lo: f64,
    pub hi: f64,
}

pub const REFERENCE_BANDS: [ReferenceBand; 3] = [
    ReferenceBand { label: GeometryLabel::Sphere, lo: 0.98, hi: 1.02 },
    ReferenceBand { label: GeometryLabel::Dumbbell, lo: 1.258, hi: 1.276 },
    ReferenceBand { label: GeometryLabel::Trimer, lo: 1.358, hi: 1.398 },
];

/// Acceptance windows extend each band by this many standard deviations.
pub const ACCEPTANCE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryClass {
    pub label: GeometryLabel,
    pub ratio: f64,
    pub ratio_err: f64,
    /// Probability mass of the ratio distribution inside the winning window; 0 when unclassified.
    pub confidence: f64,
    /// Every band whose acceptance window contains the ratio.
    pub candidates: Vec<GeometryLabel>,
    pub note: Option<String>,
}

/// γ_y/γ_x with first-order error propagation.
pub fn ratio_error(m: &DampingMeasurement) -> Result<(f64, f64), GeometryError> {
    m.validate()?;
    let r = m.gamma_y / m.gamma_x;
    let sigma = r * ((m.gamma_x_err / m.gamma_x).powi(2) + (m.gamma_y_err / m.gamma_y).powi(2)).sqrt();
    Ok((r, sigma))
}

fn window_mass(r: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    if sigma == 0.0 {
        return if r >= lo && r <= hi { 1.0 } else { 0.0 };
    }
    let n = Normal::new(r, sigma).expect("sigma > 0");
    (n.cdf(hi) - n.cdf(lo)).clamp(0.0, 1.0)
}

pub fn classify(m: &DampingMeasurement) -> Result<GeometryClass, GeometryError> {
    let (ratio, ratio_err) = ratio_error(m)?;
    let pad = ACCEPTANCE_SIGMAS * ratio_err;
    let hits: Vec<&ReferenceBand> =
        REFERENCE_BANDS.iter().filter(|b| ratio >= b.lo - pad && ratio <= b.hi + pad).collect();
    let candidates = hits.iter().map(|b| b.label).collect();
    Ok(match hits.as_slice() {
        [b] => GeometryClass {
            label: b.label,
            ratio,
            ratio_err,
            confidence: window_mass(ratio, ratio_err, b.lo - pad, b.hi + pad),
            candidates,
            note: None,
        },
        [] => GeometryClass {
            label: GeometryLabel::Unclassified,
            ratio,
            ratio_err,
            confidence: 0.0,
            candidates,
            note: Some("ratio outside every reference band (cluster or unknown shape)".into()),
        },
        _ => GeometryClass {
            label: GeometryLabel::Unclassified,
            ratio,
            ratio_err,
            confidence: 0.0,
            candidates,
            note: Some("error bar spans more than one reference band".into()),
        },
    })
}
