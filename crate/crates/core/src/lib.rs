//! Simulation and analysis of cavity-cooled librations of levitated
//! nanorotors: forward physics, synthetic heterodyne spectra, Lorentzian
//! fitting, sideband thermometry and geometry classification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consts;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod noise;
pub mod physics;
pub mod scenarios;
pub mod synth;
pub mod thermometry;
