use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::PhysicsError;

/// Which of the two stable orientations of the third Euler angle the rotor
/// settles in. The γ ≈ 0 branch swaps the roles of the `a` and `b` body axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EulerBranch {
    GammaZero,
    #[default]
    GammaHalfPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    Alpha,
    Beta,
}

impl ModeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeLabel::Alpha => "alpha",
            ModeLabel::Beta => "beta",
        }
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rigid-body and optical identity of a trapped particle.
///
/// Inertias are principal moments in kg·m², susceptibilities are the
/// dimensionless principal values of the susceptibility tensor, volume in m³.
/// Inertia ordering is not enforced so near-degenerate rotors can be modeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorModel {
    pub inertia_a: f64,
    pub inertia_b: f64,
    pub inertia_c: f64,
    pub chi_a: f64,
    pub chi_b: f64,
    pub chi_c: f64,
    pub volume: f64,
    #[serde(default)]
    pub gamma_euler_branch: EulerBranch,
}

impl RotorModel {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        for (field, v) in [
            ("inertia_a", self.inertia_a),
            ("inertia_b", self.inertia_b),
            ("inertia_c", self.inertia_c),
            ("volume", self.volume),
        ] {
            positive(field, v)?;
        }
        for (field, v) in [("chi_a", self.chi_a), ("chi_b", self.chi_b), ("chi_c", self.chi_c)] {
            finite(field, v)?;
        }
        if !(self.chi_a <= self.chi_b && self.chi_b <= self.chi_c) {
            return Err(PhysicsError::invalid("chi_a", "susceptibilities must satisfy chi_a <= chi_b <= chi_c"));
        }
        Ok(())
    }

    /// Moment of inertia that governs the given libration.
    pub fn mode_inertia(&self, label: ModeLabel) -> f64 {
        match (self.gamma_euler_branch, label) {
            (EulerBranch::GammaHalfPi, ModeLabel::Alpha) | (EulerBranch::GammaZero, ModeLabel::Beta) => self.inertia_b,
            (EulerBranch::GammaHalfPi, ModeLabel::Beta) | (EulerBranch::GammaZero, ModeLabel::Alpha) => self.inertia_a,
        }
    }

    /// Susceptibility contrast χ_c − χ_{a|b} that drives the given libration.
    pub fn susceptibility_contrast(&self, label: ModeLabel) -> f64 {
        match (self.gamma_euler_branch, label) {
            (EulerBranch::GammaHalfPi, ModeLabel::Alpha) | (EulerBranch::GammaZero, ModeLabel::Beta) => {
                self.chi_c - self.chi_a
            }
            (EulerBranch::GammaHalfPi, ModeLabel::Beta) | (EulerBranch::GammaZero, ModeLabel::Alpha) => {
                self.chi_c - self.chi_b
            }
        }
    }
}

/// Tweezer and cavity drive. All rates are angular (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalSetup {
    /// Tweezer field at the focus (V/m), carries its phase.
    pub e_tw0: Complex64,
    /// Cavity mode amplitude at the particle (V/m).
    pub e_cav0: Complex64,
    /// Cavity energy decay rate κ.
    pub kappa: f64,
    /// Δ = ω_c − ω_l.
    pub detuning: f64,
    pub wavelength: f64,
    pub pol_angle_phi: f64,
    pub n_cav: f64,
    pub finesse: f64,
    pub fsr_hz: f64,
    pub waist_x: f64,
    pub waist_y: f64,
    pub waist_cav: f64,
}

impl OpticalSetup {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        positive("kappa", self.kappa)?;
        positive("wavelength", self.wavelength)?;
        finite("detuning", self.detuning)?;
        if !(self.n_cav >= 0.0) || !self.n_cav.is_finite() {
            return Err(PhysicsError::invalid("n_cav", "must be finite and >= 0"));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.pol_angle_phi) {
            return Err(PhysicsError::invalid("pol_angle_phi", "must lie in [-pi/2, pi/2]"));
        }
        for (field, z) in [("e_tw0", self.e_tw0), ("e_cav0", self.e_cav0)] {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(PhysicsError::invalid(field, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self { detuning, ..self.clone() }
    }

    /// Laser angular frequency ω_l = 2πc/λ.
    pub fn laser_omega(&self) -> f64 {
        std::f64::consts::TAU * crate::consts::C_LIGHT / self.wavelength
    }
}

/// One librational degree of freedom in the linear-response picture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrationMode {
    pub label: ModeLabel,
    /// Mechanical angular frequency Ω_μ.
    pub omega: f64,
    /// Complex coupling rate g_μ.
    pub g: Complex64,
    /// Zero-point angular amplitude (rad).
    pub zpf: f64,
    /// Gas-collision heating (phonons/s).
    pub gamma_thermal: f64,
    /// Photon-recoil heating (phonons/s).
    pub gamma_recoil: f64,
    /// Thermal linewidth γ_μ.
    pub gamma_intrinsic: f64,
}

impl LibrationMode {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        positive("omega", self.omega)?;
        positive("zpf", self.zpf)?;
        for (field, v) in [
            ("gamma_thermal", self.gamma_thermal),
            ("gamma_recoil", self.gamma_recoil),
            ("gamma_intrinsic", self.gamma_intrinsic),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(PhysicsError::invalid(field, "must be finite and >= 0"));
            }
        }
        if !self.g.re.is_finite() || !self.g.im.is_finite() {
            return Err(PhysicsError::invalid("g", "must be finite"));
        }
        Ok(())
    }

    /// Total heating Γ_μ = thermal + recoil.
    pub fn heating_rate(&self) -> f64 {
        self.gamma_thermal + self.gamma_recoil
    }

    pub fn coupling_sq(&self) -> f64 {
        self.g.norm_sqr()
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..self.clone() }
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), PhysicsError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(PhysicsError::invalid(field, "must be finite and > 0"))
    }
}

fn finite(field: &'static str, v: f64) -> Result<(), PhysicsError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(PhysicsError::invalid(field, "must be finite"))
    }
}
