use serde::{Deserialize, Serialize};

use super::{LibrationMode, OpticalSetup, PhysicsError};

/// Anti-Stokes (cooling) and Stokes (heating) scattering rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandRates {
    pub a_minus: f64,
    pub a_plus: f64,
}

impl SidebandRates {
    pub fn net_cooling(&self) -> f64 {
        self.a_minus - self.a_plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationBudget {
    pub n_total: f64,
    pub n_phase: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    /// Resolved-sideband cooling bound κ²/4Ω².
    pub n_min_bound: f64,
}

/// A^± = |g|² κ / ((κ/2)² + (Δ ± Ω)²).
pub fn sideband_rates(mode: &LibrationMode, optics: &OpticalSetup) -> SidebandRates {
    let g2k = mode.coupling_sq() * optics.kappa;
    let hk2 = 0.25 * optics.kappa * optics.kappa;
    let lorentz = |x: f64| g2k / (hk2 + x * x);
    SidebandRates { a_minus: lorentz(optics.detuning - mode.omega), a_plus: lorentz(optics.detuning + mode.omega) }
}

/// n_φ = S_φ n_cav / κ with S_φ single-sided in rad²/Hz and κ in rad/s.
pub fn phase_noise_occupation(s_phi: f64, n_cav: f64, kappa: f64) -> f64 {
    s_phi * n_cav / kappa
}

/// κ²/4Ω².
pub fn n_min_bound(kappa: f64, omega: f64) -> f64 {
    kappa * kappa / (4.0 * omega * omega)
}

/// Rate-equation occupation at Δ = Ω without external heating, κ²/16Ω².
/// Differs from [`n_min_bound`] by a factor of four.
pub fn n_min_resonant(kappa: f64, omega: f64) -> f64 {
    kappa * kappa / (16.0 * omega * omega)
}

/// Equilibrium occupation n = (Γ + A⁺)/(A⁻ − A⁺) + n_φ(Ω).
pub fn steady_state_occupation(
    mode: &LibrationMode,
    optics: &OpticalSetup,
    s_phi_at_omega: f64,
) -> Result<OccupationBudget, PhysicsError> {
    let rates = sideband_rates(mode, optics);
    if !(rates.a_minus > rates.a_plus) {
        return Err(PhysicsError::NoNetCooling { a_minus: rates.a_minus, a_plus: rates.a_plus });
    }
    let n_phase = phase_noise_occupation(s_phi_at_omega, optics.n_cav, optics.kappa);
    let n_total = (mode.heating_rate() + rates.a_plus) / rates.net_cooling() + n_phase;
    Ok(OccupationBudget {
        n_total,
        n_phase,
        a_plus: rates.a_plus,
        a_minus: rates.a_minus,
        n_min_bound: n_min_bound(optics.kappa, mode.omega),
    })
}

/// Product of the two cavity Lorentzian denominators at probe frequency ω.
fn denominators(kappa: f64, detuning: f64, omega_eval: f64) -> f64 {
    let hk2 = 0.25 * kappa * kappa;
    (hk2 + (omega_eval + detuning).powi(2)) * (hk2 + (omega_eval - detuning).powi(2))
}

/// γ_eff(ω) = γ + 4|g|² Ω Δ κ / ([(κ/2)² + (ω+Δ)²][(κ/2)² + (ω−Δ)²]).
pub fn effective_linewidth(mode: &LibrationMode, optics: &OpticalSetup, omega_eval: f64) -> f64 {
    let (kappa, delta) = (optics.kappa, optics.detuning);
    mode.gamma_intrinsic
        + 4.0 * mode.coupling_sq() * mode.omega * delta * kappa / denominators(kappa, delta, omega_eval)
}

/// Optically shifted mechanical frequency (optical spring).
pub fn effective_frequency(mode: &LibrationMode, optics: &OpticalSetup, omega_eval: f64) -> Result<f64, PhysicsError> {
    let (kappa, delta) = (optics.kappa, optics.detuning);
    let spring = 4.0
        * mode.coupling_sq()
        * mode.omega
        * delta
        * (0.25 * kappa * kappa - omega_eval * omega_eval + delta * delta)
        / denominators(kappa, delta, omega_eval);
    let radicand = mode.omega * mode.omega - spring;
    if radicand < 0.0 {
        return Err(PhysicsError::SpringInstability { radicand });
    }
    Ok(radicand.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ModeLabel;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn mode(g_hz: f64, omega_hz: f64) -> LibrationMode {
        LibrationMode {
            label: ModeLabel::Alpha,
            omega: TAU * omega_hz,
            g: Complex64::new(TAU * g_hz, 0.0),
            zpf: 1e-5,
            gamma_thermal: 0.0,
            gamma_recoil: 0.0,
            gamma_intrinsic: 0.0,
        }
    }

    fn optics(kappa_hz: f64, detuning_hz: f64) -> OpticalSetup {
        let mut o = crate::scenarios::cluster_1d().optics;
        o.kappa = TAU * kappa_hz;
        o.detuning = TAU * detuning_hz;
        o
    }

    /// Sideband rates evaluated in exact rational arithmetic on the inputs
    /// expressed in units of 2π·Hz, then rescaled: A = 2π |g_Hz|² κ_Hz / (...).
    fn rates_oracle(g_hz: f64, kappa_hz: f64, delta_hz: f64, omega_hz: f64) -> (f64, f64) {
        // All quantities share a common factor of 2π which cancels to one power.
        let g2k = g_hz * g_hz * kappa_hz;
        let hk2 = kappa_hz * kappa_hz / 4.0;
        let m = g2k / (hk2 + (delta_hz - omega_hz).powi(2));
        let p = g2k / (hk2 + (delta_hz + omega_hz).powi(2));
        (TAU * m, TAU * p)
    }

    #[test]
    fn resonant_rates_match_hand_values() {
        let r = sideband_rates(&mode(10e3, 1e6), &optics(32.4e3, 1e6));
        let (m, p) = rates_oracle(10e3, 32.4e3, 1e6, 1e6);
        assert_relative_eq!(r.a_minus, m, max_relative = 1e-13);
        assert_relative_eq!(r.a_plus, p, max_relative = 1e-13);
        // 4 g²/κ on resonance
        assert_relative_eq!(r.a_minus, 7.757_018_897_752_577e4, max_relative = 1e-12);
        assert_relative_eq!(r.a_plus, 5.089_046_206_493_856, max_relative = 1e-9);
    }

    #[test]
    fn rates_vanish_far_off_resonance_and_match_at_zero_detuning() {
        let m = mode(10e3, 1e6);
        let far = sideband_rates(&m, &optics(32.4e3, 1e12));
        assert!(far.a_minus < 1e-6 && far.a_plus < 1e-6);
        let zero = sideband_rates(&m, &optics(32.4e3, 0.0));
        assert_eq!(zero.a_minus, zero.a_plus);
    }

    #[test]
    fn resonant_occupation_is_kappa_squared_over_sixteen_omega_squared() {
        let budget = steady_state_occupation(&mode(10e3, 1e6), &optics(32.4e3, 1e6), 0.0).unwrap();
        let brute = budget.a_plus / (budget.a_minus - budget.a_plus);
        assert_relative_eq!(budget.n_total, brute, max_relative = 1e-15);
        assert_relative_eq!(budget.n_total, 6.561e-5, max_relative = 1e-9);
        assert_relative_eq!(budget.n_total, n_min_resonant(TAU * 32.4e3, TAU * 1e6), max_relative = 1e-9);
        assert_relative_eq!(budget.n_min_bound, 2.6244e-4, max_relative = 1e-9);
        assert_eq!(budget.n_phase, 0.0);
    }

    #[test]
    fn phase_noise_occupation_is_linear_in_photon_number() {
        let m = mode(10e3, 1e6);
        let mut o = optics(32.4e3, 1e6);
        let a = steady_state_occupation(&m, &o, 1e-9).unwrap();
        o.n_cav *= 2.0;
        let b = steady_state_occupation(&m, &o, 1e-9).unwrap();
        assert_relative_eq!(b.n_phase, 2.0 * a.n_phase, max_relative = 1e-15);
    }

    #[test]
    fn heating_side_detuning_has_no_net_cooling() {
        let m = mode(10e3, 1e6);
        assert!(matches!(
            steady_state_occupation(&m, &optics(32.4e3, -1e6), 0.0),
            Err(PhysicsError::NoNetCooling { .. })
        ));
        assert!(steady_state_occupation(&m, &optics(32.4e3, 0.0), 0.0).is_err());
    }

    #[test]
    fn uncoupled_mode_keeps_bare_linewidth_and_frequency() {
        let mut m = mode(0.0, 1e6);
        m.gamma_intrinsic = 12.5;
        let o = optics(32.4e3, 0.98e6);
        for w in [0.5e6, 1e6, 2e6] {
            assert_eq!(effective_linewidth(&m, &o, TAU * w), 12.5);
            assert_eq!(effective_frequency(&m, &o, TAU * w).unwrap(), m.omega);
        }
    }

    #[test]
    fn resonant_linewidth_and_spring_shift() {
        let m = mode(10e3, 1e6);
        let o = optics(32.4e3, 1e6);
        let gamma = effective_linewidth(&m, &o, m.omega);
        assert_relative_eq!(gamma, 7.757e4, max_relative = 1e-4);
        let r = sideband_rates(&m, &o);
        assert_relative_eq!(gamma, r.a_minus - r.a_plus, max_relative = 1e-12);
        // Independent oracle: Ω_eff = Ω sqrt(1 - x), x = g² κ²/4 ÷ ((κ²/4)(κ²/4+4Ω²)) · 4Ω²/Ω²
        let (g, k, w) = (10e3_f64, 32.4e3_f64, 1e6_f64);
        let x = 4.0 * g * g * w * w * (k * k / 4.0) / ((k * k / 4.0) * (k * k / 4.0 + 4.0 * w * w)) / (w * w);
        let shift_hz = w * ((1.0 - x).sqrt() - 1.0);
        let got = (effective_frequency(&m, &o, m.omega).unwrap() - m.omega) / TAU;
        assert_relative_eq!(got, shift_hz, max_relative = 1e-6);
        assert!((got + 50.0).abs() < 0.5, "{got}");
    }

    #[test]
    fn far_detuning_removes_the_spring() {
        let m = mode(10e3, 1e6);
        let shift = |d: f64| effective_frequency(&m, &optics(32.4e3, d), m.omega).unwrap() - m.omega;
        assert!((shift(1e10) / m.omega).abs() < 1e-7);
        assert_relative_eq!(shift(1e10) / shift(1e11), 10.0, max_relative = 1e-3);
    }

    #[test]
    fn overly_strong_coupling_is_a_spring_instability() {
        let m = mode(2e6, 1e6);
        let err = effective_frequency(&m, &optics(32.4e3, 1e6), m.omega).unwrap_err();
        assert!(matches!(err, PhysicsError::SpringInstability { .. }));
    }

    #[test]
    fn occupation_minimum_sits_within_kappa_of_omega() {
        let m = mode(10e3, 1e6);
        let kappa = 32.4e3;
        let (best, _) = (0..=4000)
            .map(|i| 0.8e6 + 100.0 * i as f64)
            .filter_map(|d| steady_state_occupation(&m, &optics(kappa, d), 0.0).ok().map(|b| (d, b.n_total)))
            .fold((0.0, f64::INFINITY), |acc, (d, n)| if n < acc.1 { (d, n) } else { acc });
        assert!((best - 1e6).abs() < kappa, "{best}");
    }

    proptest! {
        #[test]
        fn linewidth_excess_equals_net_cooling(
            g_hz in 1e2..5e4f64,
            kappa_hz in 1e3..2e5f64,
            delta_hz in -3e6..3e6f64,
            omega_hz in 1e5..3e6f64,
        ) {
            let m = mode(g_hz, omega_hz);
            let o = optics(kappa_hz, delta_hz);
            let r = sideband_rates(&m, &o);
            let lhs = effective_linewidth(&m, &o, m.omega) - m.gamma_intrinsic;
            let rhs = r.a_minus - r.a_plus;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(r.a_minus));
        }

        #[test]
        fn negating_detuning_swaps_sidebands(
            g_hz in 1e2..5e4f64,
            kappa_hz in 1e3..2e5f64,
            delta_hz in -3e6..3e6f64,
            omega_hz in 1e5..3e6f64,
        ) {
            let m = mode(g_hz, omega_hz);
            let a = sideband_rates(&m, &optics(kappa_hz, delta_hz));
            let b = sideband_rates(&m, &optics(kappa_hz, -delta_hz));
            prop_assert_eq!(a.a_minus, b.a_plus);
            prop_assert_eq!(a.a_plus, b.a_minus);
        }

        #[test]
        fn anti_stokes_rate_decreases_above_resonance(
            omega_hz in 1e5..3e6f64,
            steps in proptest::collection::vec(1.0..1e5f64, 2..10),
        ) {
            let m = mode(5e3, omega_hz);
            let mut delta = omega_hz;
            let mut last = f64::INFINITY;
            for s in steps {
                delta += s;
                let r = sideband_rates(&m, &optics(32.4e3, delta));
                prop_assert!(r.a_minus < last);
                last = r.a_minus;
            }
        }
    }
}
