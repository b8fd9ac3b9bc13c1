use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::DissipationGrid;
use super::potential::{
    generalized_spectral_density, potential_from_envelope, DissipativePotential,
};
use crate::error::{positive, Error, Result};
use crate::mqme::{
    propagate_populations, rate_from_envelope, LineShapes, PairEnvelope, PopulationTrajectory,
    QuadratureSpec, RateMatrix, RateSet, Subsystem, Topology,
};
use crate::numeric::{trapezoid, uniform_grid};

/// How long to propagate populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeHorizon {
    Fixed {
        t_end: f64,
    },
    /// `multiple / relaxation rate`, capped at `max`.
    Relaxation {
        multiple: f64,
        max: f64,
    },
}

impl Default for TimeHorizon {
    fn default() -> Self {
        TimeHorizon::Relaxation {
            multiple: 25.0,
            max: 1e5,
        }
    }
}

/// Settings of one MQME-D realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub omegas: Vec<f64>,
    pub initial: Vec<f64>,
    pub dt: f64,
    pub horizon: TimeHorizon,
    pub output_points: usize,
    /// Step of the internal `[0, omega_max]` grid used for the energy
    /// conservation check; `None` skips the check.
    pub conservation_step: Option<f64>,
}

impl RunSettings {
    pub fn new(omegas: Vec<f64>, initial: Vec<f64>) -> Self {
        Self {
            omegas,
            initial,
            dt: 0.01,
            horizon: TimeHorizon::default(),
            output_points: 1001,
            conservation_step: Some(0.01),
        }
    }
}

/// Integrated dissipation against subsystem energy loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationCheck {
    pub dissipated: f64,
    pub energy_loss: f64,
    pub relative_error: f64,
    pub grid_step: f64,
    pub omega_max: f64,
}

/// Output of one realization.
#[derive(Debug, Clone)]
pub struct Realization {
    pub energies: Vec<f64>,
    pub rates: RateSet,
    pub trajectory: PopulationTrajectory,
    pub potentials: Vec<DissipativePotential>,
    pub grids: Vec<DissipationGrid>,
    pub conservation: Option<ConservationCheck>,
    pub warnings: Vec<String>,
}

struct PairEntry {
    a: usize,
    b: usize,
    env: PairEnvelope,
}

/// Subsystem with its line shapes and pair envelopes precomputed, so that
/// realizations at shifted energies only redo phase-weighted sums.
pub struct PreparedModel {
    sub: Subsystem,
    shapes: LineShapes,
    pairs: Vec<PairEntry>,
}

impl PreparedModel {
    pub fn new(sub: Subsystem, beta: f64, quad: QuadratureSpec) -> Result<Self> {
        let shapes = LineShapes::new(&sub, beta, quad)?;
        let n = sub.n_states();
        let mut unordered = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if sub.coupling(a, b) != 0.0 {
                    unordered.push((a, b));
                }
            }
        }
        let pairs = unordered
            .par_iter()
            .map(|&(a, b)| PairEntry {
                a,
                b,
                env: PairEnvelope::new(&sub, &shapes, a, b),
            })
            .collect();
        Ok(Self { sub, shapes, pairs })
    }

    pub fn subsystem(&self) -> &Subsystem {
        &self.sub
    }

    pub fn shapes(&self) -> &LineShapes {
        &self.shapes
    }

    fn ordered(&self) -> Vec<(usize, usize, &PairEnvelope)> {
        let mut out = Vec::with_capacity(2 * self.pairs.len());
        for p in &self.pairs {
            out.push((p.a, p.b, &p.env));
            out.push((p.b, p.a, &p.env));
        }
        out.sort_by_key(|&(a, b, _)| (a, b));
        out
    }

    /// Rate constants at the given state energies.
    pub fn rates(&self, energies: &[f64]) -> Result<RateSet> {
        let n = self.sub.n_states();
        if energies.len() != n {
            return Err(Error::Model(
                "energy vector does not match the state count".into(),
            ));
        }
        let constants: Vec<_> = self
            .ordered()
            .par_iter()
            .map(|&(a, b, env)| {
                (
                    b,
                    a,
                    rate_from_envelope(energies, self.sub.coupling(a, b), a, b, env, &self.shapes),
                )
            })
            .collect();
        let mut matrix = RateMatrix::zeros(n);
        let mut rows = vec![0.0; n * n];
        for &(b, a, c) in &constants {
            rows[b * n + a] = c.value.max(0.0);
        }
        if n > 0 {
            matrix = RateMatrix::from_rows(n, rows)?;
        }
        Ok(RateSet { matrix, constants })
    }

    /// Propagation length for a horizon given the rates.
    pub fn resolve_t_end(horizon: TimeHorizon, rates: &RateMatrix) -> Result<f64> {
        match horizon {
            TimeHorizon::Fixed { t_end } => {
                positive("t_end", t_end)?;
                Ok(t_end)
            }
            TimeHorizon::Relaxation { multiple, max } => {
                positive("relaxation multiple", multiple)?;
                positive("maximum t_end", max)?;
                let rate = relaxation_rate(rates);
                Ok(if rate > 0.0 {
                    (multiple / rate).min(max)
                } else {
                    max
                })
            }
        }
    }

    /// One MQME-D realization at the given state energies.
    pub fn realize(
        &self,
        energies: &[f64],
        settings: &RunSettings,
        t_end: f64,
    ) -> Result<Realization> {
        super::potential::check_grid(&settings.omegas)?;
        let sub = &self.sub;
        let n = sub.n_states();
        let rates = self.rates(energies)?;
        let trajectory =
            propagate_populations(&rates.matrix, &settings.initial, settings.dt, t_end)?;
        let steps = trajectory.len() - 1;
        let stride = if settings.output_points > 1 {
            steps.div_ceil(settings.output_points - 1).max(1)
        } else {
            steps.max(1)
        };

        let n_out = settings.omegas.len();
        let omega_max = sub
            .channels()
            .iter()
            .map(|c| c.bath.omega_max())
            .fold(0.0, f64::max);
        let check_grid = match settings.conservation_step {
            Some(step) => {
                positive("conservation grid step", step)?;
                uniform_grid(0.0, omega_max, step)
            }
            None => Vec::new(),
        };
        let mut all_omegas = settings.omegas.clone();
        all_omegas.extend_from_slice(&check_grid);

        let ordered = self.ordered();
        let full: Vec<DissipativePotential> = ordered
            .par_iter()
            .map(|&(a, b, env)| {
                potential_from_envelope(energies, a, b, env, &self.shapes, &all_omegas)
            })
            .collect();

        let mut warnings: Vec<String> = rates.warnings();
        for p in &full {
            if p.tail_warning {
                warnings.push(format!(
                    "dissipative potential I_{}{}: integrand tail ratio {:.3e} above tolerance",
                    p.b + 1,
                    p.a + 1,
                    p.tail_ratio
                ));
            }
        }

        let split =
            |p: &DissipativePotential, range: std::ops::Range<usize>| DissipativePotential {
                a: p.a,
                b: p.b,
                omegas: all_omegas[range.clone()].to_vec(),
                values: p.values[range].to_vec(),
                tail_ratio: p.tail_ratio,
                tail_warning: p.tail_warning,
            };
        let potentials: Vec<DissipativePotential> =
            full.iter().map(|p| split(p, 0..n_out)).collect();

        let grids = match sub.topology() {
            Topology::LocalBath => (0..n)
                .map(|channel| {
                    let mut coef = vec![vec![0.0; n_out]; n];
                    for p in &potentials {
                        if p.a != channel && p.b != channel {
                            continue;
                        }
                        let v = sub.coupling(p.a, p.b);
                        let bath = &sub.channels()[channel].bath;
                        for (i, (&w, &val)) in p.omegas.iter().zip(&p.values).enumerate() {
                            coef[p.a][i] += 2.0 * v * v * bath.density_over_omega(w) * val;
                        }
                    }
                    DissipationGrid::from_populations(
                        sub.labels()[channel].clone(),
                        &settings.omegas,
                        &coef,
                        &trajectory,
                        stride,
                    )
                })
                .collect::<Result<Vec<_>>>()?,
            Topology::SpinBoson => {
                let mut coef = vec![vec![0.0; n_out]; n];
                for p in &potentials {
                    for (c, x) in coef[p.a]
                        .iter_mut()
                        .zip(generalized_spectral_density(sub, p))
                    {
                        *c += x;
                    }
                }
                vec![DissipationGrid::from_populations(
                    "bath",
                    &settings.omegas,
                    &coef,
                    &trajectory,
                    stride,
                )?]
            }
        };

        let conservation = if check_grid.is_empty() {
            None
        } else {
            let occupation: Vec<f64> = (0..n)
                .map(|a| {
                    let series: Vec<f64> = trajectory.rows().map(|p| p[a]).collect();
                    trapezoid(&series, trajectory.dt())
                })
                .collect();
            let mut density = vec![0.0; check_grid.len()];
            for p in &full {
                let tail = split(p, n_out..all_omegas.len());
                for (d, x) in density
                    .iter_mut()
                    .zip(generalized_spectral_density(sub, &tail))
                {
                    *d += x * occupation[p.a];
                }
            }
            let dissipated = trapezoid(&density, settings.conservation_step.unwrap_or(0.0));
            let energy_loss: f64 = (0..n)
                .map(|a| energies[a] * (trajectory.initial()[a] - trajectory.last()[a]))
                .sum();
            let relative_error = if energy_loss != 0.0 {
                (dissipated - energy_loss).abs() / energy_loss.abs()
            } else {
                dissipated.abs()
            };
            Some(ConservationCheck {
                dissipated,
                energy_loss,
                relative_error,
                grid_step: settings.conservation_step.unwrap_or(0.0),
                omega_max,
            })
        };

        Ok(Realization {
            energies: energies.to_vec(),
            rates,
            trajectory,
            potentials,
            grids,
            conservation,
            warnings,
        })
    }
}

/// Slowest population relaxation rate: `K12 + K21` for two levels; for
/// larger systems the smallest total exchange rate of any state.
pub fn relaxation_rate(k: &RateMatrix) -> f64 {
    let n = k.n_states();
    if n == 2 {
        return k.rate(0, 1) + k.rate(1, 0);
    }
    (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| b != a)
                .map(|b| k.rate(b, a) + k.rate(a, b))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}
