use num_complex::Complex64;

use super::{LibrationMode, ModeLabel, OpticalSetup, PhysicsError, RotorModel};
use crate::consts::{C_LIGHT, EPSILON_0, HBAR};

/// Librational trap frequencies. A zero entry means the mode is untrapped
/// (degenerate susceptibility contrast).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LibrationFrequencies {
    pub alpha: f64,
    pub beta: f64,
}

impl LibrationFrequencies {
    pub fn get(&self, label: ModeLabel) -> f64 {
        match label {
            ModeLabel::Alpha => self.alpha,
            ModeLabel::Beta => self.beta,
        }
    }

    /// Modes that are not trapped by the tweezer.
    pub fn untrapped(&self) -> Vec<ModeLabel> {
        [ModeLabel::Alpha, ModeLabel::Beta].into_iter().filter(|&l| self.get(l) == 0.0).collect()
    }
}

pub fn libration_frequencies(rotor: &RotorModel, optics: &OpticalSetup) -> LibrationFrequencies {
    let e_tw = optics.e_tw0.norm();
    let freq = |label| {
        let contrast = rotor.susceptibility_contrast(label).max(0.0);
        (EPSILON_0 * rotor.volume * contrast / (2.0 * rotor.mode_inertia(label))).sqrt() * e_tw
    };
    LibrationFrequencies { alpha: freq(ModeLabel::Alpha), beta: freq(ModeLabel::Beta) }
}

/// Ground-state angular spread sqrt(ħ / 2IΩ).
pub fn zero_point_amplitude(inertia: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * inertia * omega)).sqrt()
}

/// Coupling rates g_μ = zpf_μ k_μ / ħ with
/// k_μ = (ε0 V / 4)(χ_c − χ_μ) E_c(0) E_tw*(0).
pub fn coupling_rates(
    rotor: &RotorModel,
    optics: &OpticalSetup,
    freqs: (f64, f64),
) -> Result<(Complex64, Complex64), PhysicsError> {
    let field_product = optics.e_cav0 * optics.e_tw0.conj();
    let rate = |label: ModeLabel, omega: f64| -> Result<Complex64, PhysicsError> {
        if !(omega > 0.0) {
            return Err(PhysicsError::NonPositiveFrequency(omega));
        }
        let k = field_product * (EPSILON_0 * rotor.volume / 4.0 * rotor.susceptibility_contrast(label));
        let zpf = zero_point_amplitude(rotor.mode_inertia(label), omega);
        Ok(k * (zpf / HBAR))
    };
    Ok((rate(ModeLabel::Alpha, freqs.0)?, rate(ModeLabel::Beta, freqs.1)?))
}

/// Cavity pump rate η from the orientation-independent coherent-scattering
/// drive. Vanishes for polarization aligned with the cavity axis.
pub fn pump_rate(rotor: &RotorModel, optics: &OpticalSetup) -> Complex64 {
    optics.e_cav0
        * optics.e_tw0.conj()
        * (-EPSILON_0 * rotor.chi_a * rotor.volume * optics.pol_angle_phi.sin() / (4.0 * HBAR))
}

/// Inertia about the axis governing `axis`, recovered from a measured coupling
/// and frequency: I = 8ħ |g|² |E_tw|² / (Ω³ |E_c|²).
pub fn moment_of_inertia_from_coupling(
    g: Complex64,
    omega: f64,
    optics: &OpticalSetup,
    _axis: ModeLabel,
) -> Result<f64, PhysicsError> {
    if !(omega > 0.0) {
        return Err(PhysicsError::NonPositiveFrequency(omega));
    }
    let e_c_sq = optics.e_cav0.norm_sqr();
    if e_c_sq == 0.0 {
        return Err(PhysicsError::InertiaUnidentifiable);
    }
    Ok(8.0 * HBAR * g.norm_sqr() * optics.e_tw0.norm_sqr() / (omega.powi(3) * e_c_sq))
}

/// Builds both libration modes from a rotor and its drive. Heating rates are
/// given per mode as (thermal, recoil, intrinsic linewidth).
pub fn libration_modes(
    rotor: &RotorModel,
    optics: &OpticalSetup,
    heating: [(f64, f64, f64); 2],
) -> Result<[LibrationMode; 2], PhysicsError> {
    rotor.validate()?;
    optics.validate()?;
    let freqs = libration_frequencies(rotor, optics);
    let (g_alpha, g_beta) = coupling_rates(rotor, optics, (freqs.alpha, freqs.beta))?;
    let build = |label: ModeLabel, g: Complex64, (thermal, recoil, intrinsic): (f64, f64, f64)| {
        let omega = freqs.get(label);
        let mode = LibrationMode {
            label,
            omega,
            g,
            zpf: zero_point_amplitude(rotor.mode_inertia(label), omega),
            gamma_thermal: thermal,
            gamma_recoil: recoil,
            gamma_intrinsic: intrinsic,
        };
        mode.validate().map(|_| mode)
    };
    Ok([build(ModeLabel::Alpha, g_alpha, heating[0])?, build(ModeLabel::Beta, g_beta, heating[1])?])
}

/// Peak field of a Gaussian focus with elliptic waists carrying `power` watts.
///
/// Paraxial estimate; a high-NA focus deviates from it, so treat the result as
/// a starting value rather than a calibration.
pub fn tweezer_field_from_power(power: f64, waist_x: f64, waist_y: f64) -> f64 {
    let intensity = 2.0 * power / (std::f64::consts::PI * waist_x * waist_y);
    (2.0 * intensity / (C_LIGHT * EPSILON_0)).sqrt()
}

/// Single-photon field amplitude of a Fabry-Pérot TEM00 mode whose length is
/// inferred from the free spectral range.
pub fn cavity_single_photon_field(wavelength: f64, fsr_hz: f64, waist_cav: f64) -> f64 {
    let length = C_LIGHT / (2.0 * fsr_hz);
    let mode_volume = std::f64::consts::PI * waist_cav * waist_cav * length / 4.0;
    let omega = std::f64::consts::TAU * C_LIGHT / wavelength;
    (HBAR * omega / (2.0 * EPSILON_0 * mode_volume)).sqrt()
}
