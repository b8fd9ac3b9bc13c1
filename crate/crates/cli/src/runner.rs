use std::path::{Path, PathBuf};

use dissipath_core::dissipation::{
    output_indices, ConservationCheck, DissipationGrid, PreparedModel,
};
use dissipath_core::heom::{
    probe_run, settle, HeomConfig, HeomModel, HeomSystem, HeomTrajectory, ProbeModeSpec,
};
use dissipath_core::mqme::{PopulationTrajectory, Subsystem};
use dissipath_core::tss::{prepare, run_ensemble};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, MethodKind};
use crate::error::CliError;
use crate::output::{write_dissipation, write_json, write_populations, write_steady};

/// Outcome of a completed run. Physics-validation failures leave every
/// file in place and are reported here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    method: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    conservation: Option<ConservationCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<EnsembleSummary>,
    warnings: &'a [String],
    validation: Validation<'a>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct EnsembleSummary {
    trajectories: usize,
    sigma_slow: Vec<f64>,
    realizations_with_warnings: usize,
}

#[derive(Serialize)]
struct Validation<'a> {
    passed: bool,
    failures: &'a [String],
}

#[derive(Serialize)]
struct HeomMetadata {
    n_hier: usize,
    n_matsu: usize,
    deep_matsubara: usize,
    dt_max: f64,
    rel_tol: f64,
    t_sim: f64,
    adm_count: usize,
    max_trace_error: f64,
    max_hermiticity: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    probes: Vec<ProbeMetadata>,
}

#[derive(Serialize)]
struct ProbeMetadata {
    omega: f64,
    channel: usize,
    huang_rhys: f64,
    n_levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_trace_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Configuration with every defaulted block filled in and the output
/// location removed, so that it alone reproduces the run's numbers.
pub fn resolved(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut r = cfg.clone();
    r.output = None;
    if matches!(cfg.method, MethodKind::MqmeD | MethodKind::MqmeDTss) {
        r.quadrature = Some(cfg.quadrature_spec());
        r.propagation = Some(cfg.propagation_block());
    }
    if r.subsystem.initial.is_none() {
        r.subsystem.initial = Some(cfg.initial());
    }
    r
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

fn label_file(prefix: &str, label: &str) -> String {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{prefix}_{safe}.csv")
}

fn sampled_populations(
    traj: &PopulationTrajectory,
    output_points: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let steps = traj.len() - 1;
    let stride = if output_points > 1 {
        steps.div_ceil(output_points - 1).max(1)
    } else {
        steps.max(1)
    };
    let idx = output_indices(traj.len(), stride);
    (
        idx.iter().map(|&k| traj.time(k)).collect(),
        idx.iter().map(|&k| traj.populations(k).to_vec()).collect(),
    )
}

fn write_grids(
    out: &mut Outputs,
    grids: &[DissipationGrid],
    stderr: Option<&[Vec<f64>]>,
) -> Result<(), CliError> {
    for (g, grid) in grids.iter().enumerate() {
        let path = out.path(&label_file("dissipation", &grid.label));
        write_dissipation(&path, grid)?;
        let path = out.path(&label_file("steady", &grid.label));
        write_steady(
            &path,
            &grid.omegas,
            &grid.steady(),
            stderr.map(|s| s[g].as_slice()),
        )?;
    }
    Ok(())
}

fn check_conservation(c: &Option<ConservationCheck>, tolerance: f64, failures: &mut Vec<String>) {
    if let Some(c) = c {
        if !(c.relative_error <= tolerance) {
            failures.push(format!(
                "energy conservation: dissipated {:.6e} vs energy loss {:.6e} (relative error {:.3e} > {tolerance})",
                c.dissipated, c.energy_loss, c.relative_error
            ));
        }
    }
}

/// Runs `cfg` and writes all files into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut out = Outputs {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    let beta = cfg.beta()?;
    let sub = cfg.subsystem()?;
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    let mut conservation = None;
    let mut ensemble = None;
    let t_end = match cfg.method {
        MethodKind::MqmeD => {
            let settings = cfg.run_settings();
            let model = PreparedModel::new(sub, beta, cfg.quadrature_spec())?;
            let energies = model.subsystem().energies().to_vec();
            let t_end =
                PreparedModel::resolve_t_end(settings.horizon, &model.rates(&energies)?.matrix)?;
            let r = model.realize(&energies, &settings, t_end)?;
            let (times, rows) = sampled_populations(&r.trajectory, settings.output_points);
            write_populations(&out.path("populations.csv"), &times, &rows)?;
            write_grids(&mut out, &r.grids, None)?;
            warnings.extend(r.warnings);
            conservation = r.conservation;
            t_end
        }
        MethodKind::MqmeDTss => {
            let settings = cfg.run_settings();
            let block = cfg.tss.as_ref().ok_or_else(|| CliError::Validation {
                field: "tss".into(),
                message: "missing".into(),
            })?;
            let run = cfg.tss_config(block);
            let model = prepare(&sub, beta, cfg.quadrature_spec(), run.split()?)?;
            let ens = run_ensemble(&model, &run, &settings)?;
            let (times, rows) = sampled_populations(&ens.mean, settings.output_points);
            write_populations(&out.path("populations.csv"), &times, &rows)?;
            write_grids(&mut out, &ens.grids, Some(&ens.steady_stderr))?;
            warnings.extend(ens.warnings.iter().cloned());
            conservation = ens.conservation;
            ensemble = Some(EnsembleSummary {
                trajectories: ens.n_traj,
                sigma_slow: model.sigma_slow.clone(),
                realizations_with_warnings: ens.warning_count,
            });
            ens.t_end
        }
        MethodKind::Heom | MethodKind::HeomD => run_heom(cfg, &sub, beta, &mut out, &mut failures)?,
    };
    check_conservation(
        &conservation,
        cfg.propagation_block().conservation_tolerance,
        &mut failures,
    );
    let config = resolved(cfg);
    let manifest_path = out.dir.join("manifest.json");
    let mut files: Vec<String> = out
        .files
        .iter()
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from))
        .collect();
    files.push("manifest.json".into());
    write_json(
        &manifest_path,
        &Manifest {
            tool: "dissipath",
            version: env!("CARGO_PKG_VERSION"),
            method: cfg.method.name(),
            seed: cfg.seed,
            config: &config,
            t_end,
            conservation,
            ensemble,
            warnings: &warnings,
            validation: Validation {
                passed: failures.is_empty(),
                failures: &failures,
            },
            files,
        },
    )?;
    out.files.push(manifest_path);
    Ok(RunReport {
        files: out.files,
        warnings,
        failures,
    })
}

fn trajectory_checks(
    traj: &HeomTrajectory,
    cfg: &HeomConfig,
    what: &str,
    failures: &mut Vec<String>,
) {
    if !(traj.max_trace_error <= 10.0 * cfg.rel_tol) {
        failures.push(format!(
            "{what}: trace error {:.3e} above 10 rel_tol",
            traj.max_trace_error
        ));
    }
    if !(traj.max_hermiticity <= 1e-10) {
        failures.push(format!(
            "{what}: hermiticity error {:.3e} above 1e-10",
            traj.max_hermiticity
        ));
    }
}

fn run_heom(
    cfg: &ExperimentConfig,
    sub: &Subsystem,
    beta: f64,
    out: &mut Outputs,
    failures: &mut Vec<String>,
) -> Result<f64, CliError> {
    let model = HeomModel::from_subsystem(sub)?;
    let mut hc = cfg.heom.ok_or_else(|| CliError::Validation {
        field: "heom".into(),
        message: "missing".into(),
    })?;
    let initial = cfg.initial();
    let adm_count = HeomSystem::new(&model, beta, &hc, None)?.adm_count();
    let (t_sim, traj) = settle(&model, beta, &hc, &initial)?;
    write_populations(&out.path("populations.csv"), &traj.times, &traj.populations)?;
    trajectory_checks(&traj, &hc, "populations", failures);

    let mut probes = Vec::new();
    if let (MethodKind::HeomD, Some(pb)) = (cfg.method, &cfg.probe) {
        hc.t_sim = Some(t_sim);
        let omegas = cfg.omegas();
        let channels: Vec<usize> = pb
            .channels
            .clone()
            .unwrap_or_else(|| (0..model.channels.len()).collect());
        let jobs: Vec<(usize, f64)> = channels
            .iter()
            .flat_map(|&c| omegas.iter().map(move |&w| (c, w)))
            .collect();
        let runs: Vec<_> = jobs
            .par_iter()
            .map(|&(channel, omega)| {
                let spec = ProbeModeSpec::new(channel, omega, pb.huang_rhys, beta)?;
                probe_run(&model, beta, &hc, &initial, &spec, t_sim).map(|r| (spec, r))
            })
            .collect();
        for &channel in &channels {
            let mut grid = DissipationGrid {
                label: sub.labels()[channel].clone(),
                omegas: Vec::new(),
                times: traj.times.clone(),
                rate: Vec::new(),
                cumulative: Vec::new(),
            };
            for (&(c, omega), run) in jobs.iter().zip(&runs) {
                if c != channel {
                    continue;
                }
                let levels = ProbeModeSpec::new(channel, omega, pb.huang_rhys, beta)
                    .map_or(0, |s| s.n_levels);
                match run {
                    Ok((spec, r)) => {
                        let e = &r.drift.corrected;
                        grid.omegas.push(omega);
                        grid.rate.extend(derivative(&r.trajectory.times, e));
                        grid.cumulative.extend_from_slice(e);
                        trajectory_checks(
                            &r.trajectory,
                            &hc,
                            &format!("probe w = {omega}, channel {channel}"),
                            failures,
                        );
                        probes.push(ProbeMetadata {
                            omega,
                            channel,
                            huang_rhys: spec.huang_rhys,
                            n_levels: spec.n_levels,
                            drift_slope: Some(r.drift.slope),
                            max_trace_error: Some(r.trajectory.max_trace_error),
                            error: None,
                        });
                    }
                    Err(e) => {
                        failures.push(format!("probe w = {omega}, channel {channel}: {e}"));
                        probes.push(ProbeMetadata {
                            omega,
                            channel,
                            huang_rhys: pb.huang_rhys,
                            n_levels: levels,
                            drift_slope: None,
                            max_trace_error: None,
                            error: Some(e.to_string()),
                        });
                    }
                }
            }
            write_grids(out, std::slice::from_ref(&grid), None)?;
        }
    }
    write_json(
        &out.path("heom_metadata.json"),
        &HeomMetadata {
            n_hier: hc.n_hier,
            n_matsu: hc.n_matsu,
            deep_matsubara: hc.deep_matsubara,
            dt_max: hc.dt_max,
            rel_tol: hc.rel_tol,
            t_sim,
            adm_count,
            max_trace_error: traj.max_trace_error,
            max_hermiticity: traj.max_hermiticity,
            accepted_steps: traj.stats.accepted,
            rejected_steps: traj.stats.rejected,
            probes,
        },
    )?;
    Ok(t_sim)
}

/// Central differences, one-sided at the ends.
fn derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (y[b] - y[a]) / (t[b] - t[a])
        })
        .collect()
}
