use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::{LibrationMode, PhysicsError};
use crate::consts::{HBAR, K_B};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureLaw {
    /// Invert n = 1/(exp(ħΩ/k_B T) − 1).
    #[default]
    Bose,
    /// T = n ħΩ / k_B.
    Equipartition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    /// Angular standard deviation (rad).
    pub sigma: f64,
    /// Effective mode temperature (K).
    pub temperature: f64,
    /// Full rotational revival time (s).
    pub t_rev: f64,
    /// Mean angular momentum quantum number.
    pub j_mean: f64,
}

pub fn bose_occupation(temperature: f64, omega: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// T = ħΩ / (k_B ln(1 + 1/n)); T(0) = 0.
pub fn bose_temperature(n: f64, omega: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    HBAR * omega / (K_B * (1.0 / n).ln_1p())
}

pub fn equipartition_temperature(n: f64, omega: f64) -> f64 {
    n * HBAR * omega / K_B
}

/// T_rev = 2πI/ħ.
pub fn revival_time(inertia: f64) -> f64 {
    TAU * inertia / HBAR
}

/// j ≃ sqrt(k_B T I)/ħ.
pub fn mean_angular_momentum(temperature: f64, inertia: f64) -> f64 {
    (K_B * temperature * inertia).sqrt() / HBAR
}

pub fn derived_scalars(
    mode: &LibrationMode,
    n: f64,
    inertia: f64,
    law: TemperatureLaw,
) -> Result<DerivedScalars, PhysicsError> {
    if !(n >= 0.0) {
        return Err(PhysicsError::NegativeOccupation(n));
    }
    let temperature = match law {
        TemperatureLaw::Bose => bose_temperature(n, mode.omega),
        TemperatureLaw::Equipartition => equipartition_temperature(n, mode.omega),
    };
    Ok(DerivedScalars {
        sigma: mode.zpf * (2.0 * n + 1.0).sqrt(),
        temperature,
        t_rev: revival_time(inertia),
        j_mean: mean_angular_momentum(temperature, inertia),
    })
}

/// Mass of two touching homogeneous spheres of diameter `d`.
pub fn dumbbell_mass(sphere_diameter: f64, density: f64) -> f64 {
    2.0 * density * PI / 6.0 * sphere_diameter.powi(3)
}

/// Moment of inertia of two touching spheres about an axis through the
/// contact point, perpendicular to the symmetry axis:
/// 2 (2/5 m r² + m r²) with r = d/2.
pub fn dumbbell_inertia(sphere_diameter: f64, density: f64) -> f64 {
    let r = 0.5 * sphere_diameter;
    let m = 0.5 * dumbbell_mass(sphere_diameter, density);
    2.0 * (0.4 * m * r * r + m * r * r)
}
