//! Closed-form libration physics: trap frequencies, couplings, sideband
//! scattering rates, steady-state occupations, optical spring and damping,
//! and the scalars derived from a cooled state.
//!
//! All functions are pure. Frequencies and rates are angular (rad/s), heating
//! rates are phonons per second.

mod cooling;
mod model;
mod scalars;
mod trap;

pub use cooling::{
    effective_frequency, effective_linewidth, n_min_bound, n_min_resonant, phase_noise_occupation, sideband_rates,
    steady_state_occupation, OccupationBudget, SidebandRates,
};
pub use model::{EulerBranch, LibrationMode, ModeLabel, OpticalSetup, RotorModel};
pub use scalars::{
    bose_occupation, bose_temperature, derived_scalars, dumbbell_inertia, dumbbell_mass, equipartition_temperature,
    mean_angular_momentum, revival_time, DerivedScalars, TemperatureLaw,
};
pub use trap::{
    cavity_single_photon_field, coupling_rates, libration_frequencies, libration_modes,
    moment_of_inertia_from_coupling, pump_rate, tweezer_field_from_power, zero_point_amplitude, LibrationFrequencies,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: &'static str },
    #[error("mechanical frequency must be > 0, got {0}")]
    NonPositiveFrequency(f64),
    #[error("no net cooling at this detuning (A- = {a_minus:.6e}, A+ = {a_plus:.6e})")]
    NoNetCooling { a_minus: f64, a_plus: f64 },
    #[error("spring instability: radicand {radicand:.6e} is negative")]
    SpringInstability { radicand: f64 },
    #[error("inertia unidentifiable: cavity field amplitude is zero")]
    InertiaUnidentifiable,
    #[error("occupation must be >= 0, got {0}")]
    NegativeOccupation(f64),
}

impl PhysicsError {
    pub(crate) fn invalid(field: &'static str, reason: &'static str) -> Self {
        PhysicsError::InvalidParameter { field, reason }
    }
}
