use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be {requirement}, got {value}")]
    Parameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("spectral density is undefined at negative frequency {0}")]
    NegativeFrequency(f64),

    #[error("quadrature did not converge: estimate {value:.6e}, residual {residual:.3e}")]
    Quadrature { value: f64, residual: f64 },

    #[error(
        "discretized bath recovers {recovered:.6e} of the {target:.6e} continuum reorganization \
         energy (relative error {relative:.3e} exceeds {tolerance:.3e})"
    )]
    SumRule {
        recovered: f64,
        target: f64,
        relative: f64,
        tolerance: f64,
    },

    #[error(
        "rate generator has a {dimension}-dimensional kernel; the state graph is disconnected"
    )]
    DisconnectedGenerator { dimension: usize },

    #[error("both transfer rates vanish; two-level relaxation is degenerate")]
    DegenerateRates,

    #[error("hierarchy needs an estimated {estimate} bytes, above the cap of {cap} bytes")]
    MemoryCap { estimate: usize, cap: usize },

    #[error("step size {step:.3e} fell below the floor {floor:.3e} at t = {time:.6}")]
    StepUnderflow { step: f64, floor: f64, time: f64 },

    #[error(
        "steady window [{start:.3}, {end:.3}] is not stationary: max |dP/dt| = {observed:.3e} \
         exceeds {threshold:.3e}"
    )]
    NotStationary {
        start: f64,
        end: f64,
        observed: f64,
        threshold: f64,
    },

    #[error("invalid model: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parameter {
            name,
            requirement: "positive and finite",
            value,
        })
    }
}
