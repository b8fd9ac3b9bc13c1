//! Fixtures shared by the kernel benchmarks.

use dissipath_core::bath::{discretize, Discretization, SpectralDensity};
use dissipath_core::heom::{HeomConfig, HeomModel, HeomSystem, ProbeModeSpec};
use dissipath_core::mqme::Subsystem;

/// Drude-Lorentz dimer with the 2000-mode default discretization.
pub fn dimer(reorganization: f64, gap: f64) -> Subsystem {
    let bath = || {
        discretize(
            SpectralDensity::DrudeLorentz {
                reorganization,
                cutoff: 0.5,
            },
            &Discretization::default(),
        )
        .expect("valid bath")
    };
    Subsystem::dimer(gap, 0.0, 0.25, bath(), bath()).expect("valid dimer")
}

/// Hierarchy of the strong-coupling dimer (`Lambda = 1`, depth 10) with
/// an optional probe oscillator at `omega` on the first site.
pub fn heom_system(probe_omega: Option<f64>) -> HeomSystem {
    let model = HeomModel::from_subsystem(&dimer(1.0, 2.0)).expect("valid model");
    let mut cfg = HeomConfig::new(10, 30, 0.05);
    if probe_omega.is_some() {
        cfg.deep_matsubara = 0;
    }
    let probe = probe_omega.map(|w| ProbeModeSpec::new(0, w, 1e-5, 1.0).expect("valid probe"));
    HeomSystem::new(&model, 1.0, &cfg, probe.as_ref()).expect("valid hierarchy")
}
