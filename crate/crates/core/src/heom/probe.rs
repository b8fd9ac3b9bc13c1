use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagate::{propagate_heom, HeomPropagator, HeomTrajectory};
use super::system::{HeomConfig, HeomModel, HeomSystem, ProbeModeSpec};
use crate::bath::SpectralDensity;
use crate::error::{positive, Error, Result};

/// Fraction of `[0, t_sim]` used as the steady window.
pub const STEADY_FRACTION: f64 = 0.2;

/// Smallest ladder size `n` with `1 - exp(-beta w n) >= coverage`.
pub fn boltzmann_levels(omega: f64, beta: f64, coverage: f64) -> Result<usize> {
    positive("probe frequency", omega)?;
    positive("beta", beta)?;
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::Parameter {
            name: "Boltzmann coverage",
            requirement: "inside (0, 1)",
            value: coverage,
        });
    }
    let x = -(1.0 - coverage).ln() / (beta * omega);
    let n = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    Ok((n as usize).max(1))
}

/// 99.9% coverage, relaxed to 99% below `w = 0.2` where the ladder
/// would otherwise grow too long.
pub fn default_coverage(omega: f64) -> f64 {
    if omega < 0.2 {
        0.99
    } else {
        0.999
    }
}

/// `Delta E_bp(t)` of a probe run.
pub fn probe_dissipation(traj: &HeomTrajectory) -> Result<Vec<f64>> {
    traj.probe_energy
        .clone()
        .ok_or_else(|| Error::Model("trajectory has no probe attached".into()))
}

/// `E(w, t) = J(w) / (w^2 s) Delta E_bp(t)`.
pub fn dissipation_density_from_probe(
    delta_e: &[f64],
    density: &SpectralDensity,
    omega: f64,
    huang_rhys: f64,
) -> Result<Vec<f64>> {
    positive("probe Huang-Rhys factor", huang_rhys)?;
    let j = density.evaluate(omega)?;
    positive("probe frequency", omega)?;
    let scale = j / (omega * omega * huang_rhys);
    Ok(delta_e.iter().map(|e| scale * e).collect())
}

/// Linear drift removed from a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCorrection {
    pub corrected: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub window_start: f64,
}

/// Largest `|dP_a/dt|` between consecutive samples inside `[start, end]`.
pub fn max_population_rate(times: &[f64], populations: &[Vec<f64>], start: f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 1..times.len() {
        if times[k - 1] < start - 1e-12 {
            continue;
        }
        let dt = times[k] - times[k - 1];
        for (a, b) in populations[k].iter().zip(&populations[k - 1]) {
            worst = worst.max(((a - b) / dt).abs());
        }
    }
    worst
}

/// Fits `E = m t + b` by least squares over the final `fraction` of the
/// series and returns `E(t) - m t`, after checking that the populations
/// are stationary over that window.
pub fn drift_correct(
    times: &[f64],
    series: &[f64],
    populations: &[Vec<f64>],
    fraction: f64,
    threshold: f64,
) -> Result<DriftCorrection> {
    if times.len() != series.len() || times.len() != populations.len() || times.len() < 3 {
        return Err(Error::Model(
            "drift correction needs matching series of at least 3 samples".into(),
        ));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Parameter {
            name: "steady window fraction",
            requirement: "inside (0, 1]",
            value: fraction,
        });
    }
    let end = *times.last().unwrap_or(&0.0);
    let start = end * (1.0 - fraction);
    let observed = max_population_rate(times, populations, start);
    if observed > threshold {
        return Err(Error::NotStationary {
            start,
            end,
            observed,
            threshold,
        });
    }
    let window: Vec<(f64, f64)> = times
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= start - 1e-12)
        .map(|(&t, &e)| (t, e))
        .collect();
    let n = window.len() as f64;
    let tm = window.iter().map(|w| w.0).sum::<f64>() / n;
    let em = window.iter().map(|w| w.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|w| (w.0 - tm).powi(2)).sum();
    let sxy: f64 = window.iter().map(|w| (w.0 - tm) * (w.1 - em)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(DriftCorrection {
        corrected: times
            .iter()
            .zip(series)
            .map(|(t, e)| e - slope * t)
            .collect(),
        slope,
        intercept: em - slope * tm,
        window_start: start,
    })
}

/// Shortest horizon `T` (a multiple of the output step) whose final 20%
/// is stationary, found by propagating without a probe.
pub fn choose_t_sim(
    model: &HeomModel,
    beta: f64,
    cfg: &HeomConfig,
    initial: &[f64],
) -> Result<f64> {
    match cfg.t_sim {
        Some(t) => Ok(t),
        None => settle(model, beta, cfg, initial).map(|(t, _)| t),
    }
}

/// Probe-free propagation to the horizon of [`choose_t_sim`], returning the
/// horizon and the trajectory sampled up to it. A fixed `cfg.t_sim` is used
/// as given.
pub fn settle(
    model: &HeomModel,
    beta: f64,
    cfg: &HeomConfig,
    initial: &[f64],
) -> Result<(f64, HeomTrajectory)> {
    let sys = HeomSystem::new(model, beta, cfg, None)?;
    let mut prop = HeomPropagator::new(&sys, cfg, sys.initial_state(initial, None)?)?;
    if let Some(t) = cfg.t_sim {
        prop.advance_to(t)?;
        return Ok((t, prop.finish()));
    }
    let segment = (200.0 * cfg.output_step).max(50.0);
    let floor = 20.0 * cfg.output_step;
    let horizon = loop {
        let target = (prop.time() + segment).min(cfg.t_sim_max);
        prop.advance_to(target)?;
        let traj = prop.trajectory();
        // Earliest sample after which every rate stays below threshold.
        let mut settled = 0.0;
        for k in 1..traj.times.len() {
            let dt = traj.times[k] - traj.times[k - 1];
            let rate = traj.populations[k]
                .iter()
                .zip(&traj.populations[k - 1])
                .fold(0.0f64, |m, (a, b)| m.max(((a - b) / dt).abs()));
            if rate > cfg.stationarity {
                settled = traj.times[k];
            }
        }
        let horizon = ((settled / (1.0 - STEADY_FRACTION)).max(floor) / cfg.output_step).ceil()
            * cfg.output_step;
        if horizon <= prop.time() {
            break horizon;
        }
        if prop.time() >= cfg.t_sim_max {
            log::warn!(
                "populations not stationary by t = {}; using that horizon",
                cfg.t_sim_max
            );
            break cfg.t_sim_max;
        }
    };
    let mut traj = prop.finish();
    let keep = traj
        .times
        .iter()
        .take_while(|&&t| t <= horizon * (1.0 + 1e-12))
        .count();
    traj.times.truncate(keep);
    traj.populations.truncate(keep);
    Ok((horizon, traj))
}

/// One probe-mode hierarchy run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRun {
    pub probe: ProbeModeSpec,
    pub t_sim: f64,
    pub trajectory: HeomTrajectory,
    /// `E(w, t)` before drift correction.
    pub density: Vec<f64>,
    pub drift: DriftCorrection,
}

impl ProbeRun {
    /// Drift-corrected `E(w, t_sim)`.
    pub fn steady(&self) -> f64 {
        *self.drift.corrected.last().unwrap_or(&0.0)
    }
}

/// Propagates with `probe` attached for `t_sim` and converts the probe
/// energy to a dissipation density of the probe's channel.
pub fn probe_run(
    model: &HeomModel,
    beta: f64,
    cfg: &HeomConfig,
    initial: &[f64],
    probe: &ProbeModeSpec,
    t_sim: f64,
) -> Result<ProbeRun> {
    let sys = HeomSystem::new(model, beta, cfg, Some(probe))?;
    let ladder = probe.thermal_populations(beta);
    let y0 = sys.initial_state(initial, Some(&ladder))?;
    let trajectory = propagate_heom(&sys, cfg, y0, t_sim)?;
    let channel = &model.channels[probe.channel];
    let density_model = SpectralDensity::drude_lorentz(channel.reorganization, channel.cutoff)?;
    let density = dissipation_density_from_probe(
        &probe_dissipation(&trajectory)?,
        &density_model,
        probe.frequency,
        probe.huang_rhys,
    )?;
    let drift = drift_correct(
        &trajectory.times,
        &density,
        &trajectory.populations,
        STEADY_FRACTION,
        cfg.stationarity,
    )?;
    Ok(ProbeRun {
        probe: *probe,
        t_sim,
        trajectory,
        density,
        drift,
    })
}

/// Result of one `(w, channel)` entry of a scan.
#[derive(Debug, Clone)]
pub struct ProbeScanEntry {
    pub omega: f64,
    pub channel: usize,
    pub run: Result<ProbeRun>,
}

/// One probe run per frequency and channel, all sharing one horizon.
/// Failures are kept per entry and do not stop the scan.
pub fn probe_scan(
    model: &HeomModel,
    beta: f64,
    cfg: &HeomConfig,
    initial: &[f64],
    omegas: &[f64],
    huang_rhys: f64,
    channels: &[usize],
) -> Result<Vec<ProbeScanEntry>> {
    if omegas.is_empty() || channels.is_empty() {
        return Ok(Vec::new());
    }
    let t_sim = choose_t_sim(model, beta, cfg, initial)?;
    let jobs: Vec<(f64, usize)> = omegas
        .iter()
        .flat_map(|&w| channels.iter().map(move |&c| (w, c)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(omega, channel)| ProbeScanEntry {
            omega,
            channel,
            run: ProbeModeSpec::new(channel, omega, huang_rhys, beta)
                .and_then(|p| probe_run(model, beta, cfg, initial, &p, t_sim)),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_counts() {
        assert_eq!(boltzmann_levels(10.0, 1.0, 0.999).unwrap(), 1);
        assert_eq!(boltzmann_levels(0.2, 1.0, 0.999).unwrap(), 35);
        assert!(
            boltzmann_levels(0.1, 1.0, 0.99).unwrap() < boltzmann_levels(0.1, 1.0, 0.999).unwrap()
        );
        assert!(boltzmann_levels(0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn flat_series_is_unchanged() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let series = vec![0.3; 50];
        let pops = vec![vec![0.5, 0.5]; 50];
        let d = drift_correct(&times, &series, &pops, 0.2, 1e-4).unwrap();
        assert_eq!(d.slope, 0.0);
        assert_eq!(d.corrected, series);
    }

    #[test]
    fn moving_populations_are_refused() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let pops: Vec<Vec<f64>> = times
            .iter()
            .map(|t| vec![1.0 - 0.01 * t, 0.01 * t])
            .collect();
        let err = drift_correct(&times, &vec![0.0; 50], &pops, 0.2, 1e-4).unwrap_err();
        assert!(matches!(err, Error::NotStationary { .. }));
    }
}
