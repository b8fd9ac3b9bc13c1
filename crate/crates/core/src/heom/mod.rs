//! Hierarchical equations of motion for Drude-Lorentz baths, with an
//! optional probe oscillator for frequency-resolved dissipation.

mod decomposition;
mod hierarchy;
mod integrator;
mod probe;
mod propagate;
mod system;

pub use decomposition::{correlation, drude_lorentz_terms, ExpTerm};
pub use hierarchy::{adm_count, Hierarchy, Link, Term};
pub use integrator::{
    Lawson, Method, SplitSystem, StepControl, StepStats, Tableau, CASH_KARP, FEHLBERG,
};
pub use probe::{
    boltzmann_levels, choose_t_sim, default_coverage, dissipation_density_from_probe,
    drift_correct, max_population_rate, probe_dissipation, probe_run, probe_scan, settle,
    DriftCorrection, ProbeRun, ProbeScanEntry, STEADY_FRACTION,
};
pub use propagate::{propagate_heom, HeomPropagator, HeomTrajectory};
pub use system::{HeomChannel, HeomConfig, HeomModel, HeomSystem, ProbeModeSpec};
