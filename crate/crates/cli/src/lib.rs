//! Config-driven runner for the `dissipath` pipelines: MQME-D, its
//! time-scale-separated ensemble, and the hierarchy oracle.

// `!(x > 0.0)` guards are written that way so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod runner;

pub use compare::{compare_dirs, l1_distance, CompareReport};
pub use config::{load_config, ExperimentConfig, MethodKind, ModelKind};
pub use error::CliError;
pub use runner::{run_experiment, RunReport};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "DISSIPATH_WORKERS";

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}
