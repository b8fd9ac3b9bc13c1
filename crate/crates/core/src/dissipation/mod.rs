//! Frequency- and mode-resolved dissipation under rate dynamics.

mod grid;
mod modes;
mod pipeline;
mod potential;

pub use grid::{accumulate, output_indices, DissipationGrid};
pub use modes::{
    bin_modes, mode_dissipation_rate_constant, mode_dissipation_rates,
    mode_dissipation_rates_for_pair, mode_energies, total_mode_rate, ModeDissipationRates,
    ModeRates,
};
pub use pipeline::{
    relaxation_rate, ConservationCheck, PreparedModel, Realization, RunSettings, TimeHorizon,
};
pub use potential::{
    dissipative_potential, dissipative_spectral_density, generalized_potential,
    generalized_spectral_density, DissipativePotential,
};
