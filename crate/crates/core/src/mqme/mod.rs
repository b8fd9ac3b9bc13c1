//! Markovian population dynamics: subsystem description, rate constants
//! from line-broadening functions, and rate-equation propagation.

mod envelope;
mod propagate;
mod rates;
mod subsystem;

pub use envelope::{LineShapes, PairEnvelope, PhasedEnvelope, QuadratureSpec};
pub use propagate::{
    analytic_two_level, propagate_populations, steady_state, PopulationTrajectory,
};
pub(crate) use rates::rate_from_envelope;
pub use rates::{rate_constant, rate_matrix, RateConstant, RateMatrix, RateSet};
pub use subsystem::{Channel, Subsystem, Topology};
