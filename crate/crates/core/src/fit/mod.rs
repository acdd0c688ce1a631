//! Least-squares engine and the model-specific fitters built on it.

pub mod lm;
mod lorentzian;
mod pair;
mod scan;

pub use lm::{CurveFit, LmOptions, Weighting};
pub use lorentzian::{
    fit_lorentzian, fit_lorentzian_data, guess_lorentzian, LorentzianFit, LorentzianParams, MIN_WINDOW_BINS,
};

pub use pair::{fit_sideband_pair, PairFit, PairLayout, PairWindows};
pub use scan::{
    fit_occupation_curve, fit_scan_frequency, fit_scan_linewidth, linewidth_kernel, spring_frequency, FittedParam,
    OccupationModel, OutlierRule, ScanDatum, ScanFitKind, ScanFitResult, MIN_SCAN_POINTS,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("degenerate fit window")]
    Degenerate,
    #[error("not enough data: need {need}, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("underdetermined scan: {inliers} inliers, need at least {need}")]
    Underdetermined { inliers: usize, need: usize },
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
}
