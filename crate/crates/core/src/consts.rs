//! CODATA 2018 constants and unit helpers.
//!
//! Everything inside the crate works with angular frequencies (rad/s). Files
//! and the command line carry ordinary frequencies (Hz); use [`hz_to_rad`] and
//! [`rad_to_hz`] at those boundaries.

use std::f64::consts::TAU;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Unified atomic mass unit, i.e. one dalton (kg).
pub const DALTON: f64 = 1.660_539_066_60e-27;

#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    TAU * f_hz
}

#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_is_an_exact_two_pi() {
        for f in [0.0, 1.0, 32.4e3, 1.03e6, 9.72e9] {
            assert_eq!(hz_to_rad(f), f * TAU);
            assert!((rad_to_hz(hz_to_rad(f)) - f).abs() <= f * f64::EPSILON);
        }
    }
}
