//! Static-disorder ensembles: the slow part of each spectral density is
//! replaced by Gaussian energy shifts, the fast part drives rate dynamics,
//! and realizations are averaged.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{split_tss, TssSplit};
use crate::dissipation::{
    relaxation_rate, ConservationCheck, DissipationGrid, PreparedModel, Realization, RunSettings,
    TimeHorizon,
};
use crate::error::{positive, Error, Result};
use crate::mqme::{PopulationTrajectory, QuadratureSpec, Subsystem, Topology};

/// Trajectories evaluated per parallel batch before reduction.
const BATCH: usize = 16;

/// How the disorder scale enters the Gaussian draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// The slow-bath integral is used as the standard deviation.
    #[default]
    Verbatim,
    /// Its square root is used as the standard deviation.
    Sqrt,
}

impl SigmaMode {
    pub fn deviation(self, sigma: f64) -> f64 {
        match self {
            SigmaMode::Verbatim => sigma,
            SigmaMode::Sqrt => sigma.sqrt(),
        }
    }
}

/// Correlation of the energy shifts between states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderTopology {
    /// One independent draw per state, with that state's channel scale.
    IndependentPerState,
    /// One draw `delta` shifting the two states by `+delta` and `-delta`.
    AntiCorrelated,
}

impl DisorderTopology {
    pub fn default_for(topology: Topology) -> Self {
        match topology {
            Topology::LocalBath => DisorderTopology::IndependentPerState,
            Topology::SpinBoson => DisorderTopology::AntiCorrelated,
        }
    }
}

/// Ensemble settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TssRunConfig {
    pub eta: f64,
    pub cutoff: f64,
    pub trajectories: usize,
    pub seed: u64,
    #[serde(default)]
    pub sigma_mode: SigmaMode,
    /// `None` picks the model's default.
    #[serde(default)]
    pub topology: Option<DisorderTopology>,
}

impl TssRunConfig {
    pub fn new(eta: f64, cutoff: f64, trajectories: usize, seed: u64) -> Self {
        Self {
            eta,
            cutoff,
            trajectories,
            seed,
            sigma_mode: SigmaMode::Verbatim,
            topology: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        TssSplit::new(self.eta, self.cutoff)?;
        if self.trajectories == 0 {
            return Err(Error::Parameter {
                name: "trajectory count",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        Ok(())
    }

    pub fn split(&self) -> Result<TssSplit> {
        TssSplit::new(self.eta, self.cutoff)
    }
}

/// Independent random stream for trajectory `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-state energy shifts for one realization.
pub fn sample_disorder<R: rand::Rng>(
    topology: DisorderTopology,
    mode: SigmaMode,
    sigma_per_channel: &[f64],
    n_states: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let normal = |sigma: f64| {
        Normal::new(0.0, mode.deviation(sigma)).map_err(|_| Error::Parameter {
            name: "disorder scale",
            requirement: "finite and nonnegative",
            value: sigma,
        })
    };
    match topology {
        DisorderTopology::IndependentPerState => {
            if sigma_per_channel.len() != n_states {
                return Err(Error::Model(
                    "independent disorder needs one channel per state".into(),
                ));
            }
            sigma_per_channel
                .iter()
                .map(|&s| Ok(normal(s)?.sample(rng)))
                .collect()
        }
        DisorderTopology::AntiCorrelated => {
            if n_states != 2 || sigma_per_channel.len() != 1 {
                return Err(Error::Model(
                    "anti-correlated disorder needs two states and one channel".into(),
                ));
            }
            let delta = normal(sigma_per_channel[0])?.sample(rng);
            Ok(vec![delta, -delta])
        }
    }
}

/// Fast-bath model and per-channel slow-bath scales.
pub struct TssModel {
    pub model: PreparedModel,
    pub sigma_slow: Vec<f64>,
    pub split: TssSplit,
}

/// Splits every channel and prepares the fast-bath model.
pub fn prepare(
    sub: &Subsystem,
    beta: f64,
    quad: QuadratureSpec,
    split: TssSplit,
) -> Result<TssModel> {
    positive("beta", beta)?;
    let mut sigma_slow = Vec::with_capacity(sub.channels().len());
    let fast = sub.map_baths(|bath| {
        let s = split_tss(bath, split, beta)?;
        sigma_slow.push(s.sigma_slow);
        Ok(s.fast)
    })?;
    Ok(TssModel {
        model: PreparedModel::new(fast, beta, quad)?,
        sigma_slow,
        split,
    })
}

/// Averages over the disorder ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub mean: PopulationTrajectory,
    pub grids: Vec<DissipationGrid>,
    /// Standard error of `E(omega, t_end)` per grid and frequency.
    pub steady_stderr: Vec<Vec<f64>>,
    pub n_traj: usize,
    pub t_end: f64,
    /// Realizations with at least one quadrature tail warning.
    pub warning_count: usize,
    pub warnings: Vec<String>,
    /// Conservation check of the first realization.
    pub conservation: Option<ConservationCheck>,
}

struct Accumulator {
    populations: Vec<f64>,
    rate: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    steady_mean: Vec<Vec<f64>>,
    steady_m2: Vec<Vec<f64>>,
    count: usize,
    warning_count: usize,
    warnings: Vec<String>,
}

impl Accumulator {
    fn new(first: &Realization) -> Self {
        let zeros = |f: &dyn Fn(&DissipationGrid) -> usize| {
            first.grids.iter().map(|g| vec![0.0; f(g)]).collect()
        };
        Self {
            populations: vec![0.0; first.trajectory.len() * first.trajectory.n_states()],
            rate: zeros(&|g| g.rate.len()),
            cumulative: zeros(&|g| g.cumulative.len()),
            steady_mean: zeros(&|g| g.omegas.len()),
            steady_m2: zeros(&|g| g.omegas.len()),
            count: 0,
            warning_count: 0,
            warnings: Vec::new(),
        }
    }

    fn add(&mut self, r: &Realization) {
        self.count += 1;
        let n = self.count as f64;
        for (acc, p) in self
            .populations
            .iter_mut()
            .zip(r.trajectory.rows().flatten())
        {
            *acc += p;
        }
        for (g, grid) in r.grids.iter().enumerate() {
            for (acc, x) in self.rate[g].iter_mut().zip(&grid.rate) {
                *acc += x;
            }
            for (acc, x) in self.cumulative[g].iter_mut().zip(&grid.cumulative) {
                *acc += x;
            }
            for (i, x) in grid.steady().into_iter().enumerate() {
                let delta = x - self.steady_mean[g][i];
                self.steady_mean[g][i] += delta / n;
                self.steady_m2[g][i] += delta * (x - self.steady_mean[g][i]);
            }
        }
        if !r.warnings.is_empty() {
            self.warning_count += 1;
            for w in &r.warnings {
                if self.warnings.len() < 8 && !self.warnings.contains(w) {
                    self.warnings.push(w.clone());
                }
            }
        }
    }
}

/// Runs `cfg.trajectories` realizations of the fast-bath model with
/// disorder drawn from `(cfg.seed, index)` streams and averages them.
///
/// Realizations are evaluated in parallel batches and reduced in index
/// order, so the result does not depend on the number of worker threads.
pub fn run_ensemble(
    tss: &TssModel,
    cfg: &TssRunConfig,
    settings: &RunSettings,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    let model = &tss.model;
    let sub = model.subsystem();
    let n = sub.n_states();
    let topology = cfg
        .topology
        .unwrap_or_else(|| DisorderTopology::default_for(sub.topology()));
    let base = sub.energies().to_vec();

    let energies: Vec<Vec<f64>> = (0..cfg.trajectories)
        .map(|i| {
            let mut rng = trajectory_rng(cfg.seed, i as u64);
            let shifts = sample_disorder(topology, cfg.sigma_mode, &tss.sigma_slow, n, &mut rng)?;
            Ok(base.iter().zip(&shifts).map(|(e, d)| e + d).collect())
        })
        .collect::<Result<_>>()?;

    let t_end = match settings.horizon {
        TimeHorizon::Fixed { .. } => {
            PreparedModel::resolve_t_end(settings.horizon, &model.rates(&base)?.matrix)?
        }
        TimeHorizon::Relaxation { multiple, max } => {
            positive("relaxation multiple", multiple)?;
            let slowest = energies
                .par_iter()
                .map(|e| model.rates(e).map(|r| relaxation_rate(&r.matrix)))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if slowest > 0.0 {
                (multiple / slowest).min(max)
            } else {
                max
            }
        }
    };

    let quiet = RunSettings {
        conservation_step: None,
        ..settings.clone()
    };
    let mut acc: Option<Accumulator> = None;
    let mut template: Option<Realization> = None;
    let mut conservation = None;
    for (batch_index, batch) in energies.chunks(BATCH).enumerate() {
        let results: Vec<Realization> = batch
            .par_iter()
            .enumerate()
            .map(|(k, e)| {
                let s = if batch_index == 0 && k == 0 {
                    settings
                } else {
                    &quiet
                };
                model.realize(e, s, t_end)
            })
            .collect::<Result<_>>()?;
        for r in results {
            let a = acc.get_or_insert_with(|| Accumulator::new(&r));
            a.add(&r);
            if template.is_none() {
                conservation = r.conservation;
                template = Some(r);
            }
        }
    }
    let acc = acc.ok_or_else(|| Error::Model("empty ensemble".into()))?;
    let template = template.ok_or_else(|| Error::Model("empty ensemble".into()))?;
    let count = acc.count as f64;

    let mean = PopulationTrajectory::from_rows(
        template.trajectory.dt(),
        n,
        acc.populations.iter().map(|x| x / count).collect(),
    )?;
    let grids = template
        .grids
        .iter()
        .enumerate()
        .map(|(g, grid)| DissipationGrid {
            label: grid.label.clone(),
            omegas: grid.omegas.clone(),
            times: grid.times.clone(),
            rate: acc.rate[g].iter().map(|x| x / count).collect(),
            cumulative: acc.cumulative[g].iter().map(|x| x / count).collect(),
        })
        .collect();
    let steady_stderr = acc
        .steady_m2
        .iter()
        .map(|m2| {
            m2.iter()
                .map(|&m| {
                    if acc.count > 1 {
                        (m / (count - 1.0)).sqrt() / count.sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(EnsembleResult {
        mean,
        grids,
        steady_stderr,
        n_traj: acc.count,
        t_end,
        warning_count: acc.warning_count,
        warnings: acc.warnings,
        conservation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_scale_gives_zero_shifts() {
        let mut rng = trajectory_rng(7, 0);
        let s = sample_disorder(
            DisorderTopology::IndependentPerState,
            SigmaMode::Verbatim,
            &[0.0, 0.0],
            2,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, idx| {
            let mut rng = trajectory_rng(seed, idx);
            sample_disorder(
                DisorderTopology::AntiCorrelated,
                SigmaMode::Verbatim,
                &[0.3],
                2,
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(draw(11, 3), draw(11, 3));
        assert_ne!(draw(11, 3), draw(11, 4));
        assert_ne!(draw(11, 3), draw(12, 3));
        let s = draw(5, 0);
        assert_eq!(s[0], -s[1]);
    }

    #[test]
    fn topology_mismatch_rejected() {
        let mut rng = trajectory_rng(1, 0);
        assert!(sample_disorder(
            DisorderTopology::AntiCorrelated,
            SigmaMode::Sqrt,
            &[0.1, 0.1],
            2,
            &mut rng
        )
        .is_err());
        assert!(sample_disorder(
            DisorderTopology::IndependentPerState,
            SigmaMode::Sqrt,
            &[0.1],
            2,
            &mut rng
        )
        .is_err());
    }
}
