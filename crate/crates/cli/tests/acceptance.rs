//! End-to-end acceptance checks. Each test prints one
//! `criterion N: PASS|FAIL` line with the measured quantity and the
//! tolerance it was held to.

use std::io::Write;
use std::path::Path;

use dissipath_cli::compare::ChannelComparison;
use dissipath_cli::config::FrequencyGrid;
use dissipath_cli::output::read_steady;
use dissipath_cli::{
    compare_dirs, l1_distance, presets, run_experiment, with_workers, ExperimentConfig, MethodKind,
};
use dissipath_core::bath::{discretize, Discretization, SpectralDensity};
use dissipath_core::dissipation::PreparedModel;
use dissipath_core::heom::{probe_run, settle, HeomModel, ProbeModeSpec};
use dissipath_core::mqme::{analytic_two_level, propagate_populations, steady_state, RateMatrix};

const CONDITIONS: [&str; 6] = ["i", "ii", "iii", "iv", "v", "vi"];

fn verdict(n: usize, pass: bool, detail: &str) {
    // Written to the stream directly so the line survives libtest's capture of passing tests.
    let _ = writeln!(
        std::io::stdout(),
        "criterion {n}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn preset(name: &str, method: MethodKind) -> ExperimentConfig {
    presets::preset(name, method).unwrap()
}

fn grid(start: f64, stop: f64, step: f64) -> Option<FrequencyGrid> {
    Some(FrequencyGrid { start, stop, step })
}

/// MQME rate matrix of a bundled preset.
fn rates(cfg: &ExperimentConfig) -> RateMatrix {
    let model = PreparedModel::new(
        cfg.subsystem().unwrap(),
        cfg.beta().unwrap(),
        cfg.quadrature_spec(),
    )
    .unwrap();
    let energies = model.subsystem().energies().to_vec();
    model.rates(&energies).unwrap().matrix
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn final_sigma_z(dir: &Path) -> f64 {
    let p = dissipath_cli::output::read_final_populations(dir)
        .unwrap()
        .unwrap();
    p[0] - p[1]
}

#[test]
fn criterion_01_discretization_recovery() {
    let lam = 0.2;
    let bath = discretize(
        SpectralDensity::DrudeLorentz {
            reorganization: lam,
            cutoff: 0.5,
        },
        &Discretization::new(2000, 15.0).unchecked(),
    )
    .unwrap();
    let ratio = bath.modes().iter().map(|m| m.reorganization).sum::<f64>() / lam;
    verdict(
        1,
        (ratio - 0.979).abs() <= 0.002,
        &format!("sum lambda_j / Lambda = {ratio:.5} (target 0.979 +- 0.002)"),
    );
}

#[test]
fn criterion_02_propagator_vs_closed_form() {
    let k = rates(&preset("table1_cond_ii_dE2", MethodKind::MqmeD));
    // K12 is the 2 -> 1 rate.
    let (k12, k21) = (k.rate(0, 1), k.rate(1, 0));
    let t_end = 10.0 / (k12 + k21);
    let traj = propagate_populations(&k, &[1.0, 0.0], 0.01, t_end).unwrap();
    let sz = traj.sigma_z().unwrap();
    let sup = sz
        .iter()
        .enumerate()
        .map(|(i, &s)| (s - analytic_two_level(k12, k21, 1.0, traj.time(i)).unwrap()).abs())
        .fold(0.0, f64::max);
    verdict(
        2,
        sup <= 1e-8,
        &format!("sup |sigma_z - closed form| = {sup:.3e} over [0, {t_end:.1}] (tolerance 1e-8)"),
    );
}

#[test]
fn criterion_03_detailed_balance() {
    let mut worst: f64 = 0.0;
    for c in CONDITIONS {
        for de in ["1", "2"] {
            let cfg = preset(&format!("table1_cond_{c}_dE{de}"), MethodKind::MqmeD);
            let p = steady_state(&rates(&cfg)).unwrap();
            let gap: f64 = de.parse().unwrap();
            let expected = (-cfg.beta().unwrap() * gap).exp();
            let rel = (p[0] / p[1] - expected).abs() / expected;
            println!(
                "  cond {c}, dE {de}: P1/P2 = {:.6e}, exp(-beta dE) = {expected:.6e}",
                p[0] / p[1]
            );
            worst = worst.max(rel);
        }
    }
    verdict(
        3,
        worst <= 1e-2,
        &format!("worst relative deviation {worst:.3e} over 12 conditions (tolerance 1e-2)"),
    );
}

#[test]
fn criterion_04_degenerate_null_and_symmetry() {
    let mut worst_null: f64 = 0.0;
    let mut identical = true;
    for c in CONDITIONS {
        let null = tempfile::tempdir().unwrap();
        let reference = tempfile::tempdir().unwrap();
        run_experiment(
            &preset(&format!("table1_cond_{c}_dE0"), MethodKind::MqmeD),
            null.path(),
        )
        .unwrap();
        run_experiment(
            &preset(&format!("table1_cond_{c}_dE1"), MethodKind::MqmeD),
            reference.path(),
        )
        .unwrap();
        let scale = read_steady(reference.path())
            .unwrap()
            .iter()
            .flat_map(|t| t.values.clone())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let peak = read_steady(null.path())
            .unwrap()
            .iter()
            .flat_map(|t| t.values.clone())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        worst_null = worst_null.max(peak / scale);

        for de in ["1", "2"] {
            let dir = tempfile::tempdir().unwrap();
            run_experiment(
                &preset(&format!("table1_cond_{c}_dE{de}"), MethodKind::MqmeD),
                dir.path(),
            )
            .unwrap();
            for prefix in ["dissipation", "steady"] {
                let a = std::fs::read(dir.path().join(format!("{prefix}_1.csv"))).unwrap();
                let b = std::fs::read(dir.path().join(format!("{prefix}_2.csv"))).unwrap();
                identical &= a == b;
            }
        }
    }
    verdict(
        4,
        worst_null <= 1e-6 && identical,
        &format!(
            "max |E(w,inf)| at dE = 0 is {worst_null:.3e} x scale (tolerance 1e-6); \
             molecule grids bitwise identical for dE > 0: {identical}"
        ),
    );
}

#[test]
fn criterion_05_energy_conservation() {
    let mut worst: f64 = 0.0;
    for c in CONDITIONS {
        for de in ["1", "2"] {
            let dir = tempfile::tempdir().unwrap();
            run_experiment(
                &preset(&format!("table1_cond_{c}_dE{de}"), MethodKind::MqmeD),
                dir.path(),
            )
            .unwrap();
            let m = manifest(dir.path());
            let err = m["conservation"]["relative_error"].as_f64().unwrap();
            println!(
                "  cond {c}, dE {de}: dissipated {:.6}, energy loss {:.6}",
                m["conservation"]["dissipated"], m["conservation"]["energy_loss"]
            );
            worst = worst.max(err);
        }
    }
    verdict(
        5,
        worst <= 0.03,
        &format!("worst relative conservation error {worst:.3e} over 12 conditions (tolerance 3%)"),
    );
}

#[test]
fn criterion_06_oracle_population_agreement() {
    let cfg = preset("table1_cond_ii_dE2", MethodKind::Heom);
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&cfg, dir.path()).unwrap();
    assert!(report.passed(), "{:?}", report.failures);
    let heom = final_sigma_z(dir.path());
    let p = steady_state(&rates(&preset("table1_cond_ii_dE2", MethodKind::MqmeD))).unwrap();
    let mqme = p[0] - p[1];
    let diff = (heom - mqme).abs();
    // The hierarchy's own steady state may carry perturbative shifts, so
    // detailed balance only holds loosely.
    let (p1, p2) = ((1.0 + heom) / 2.0, (1.0 - heom) / 2.0);
    let boltzmann = (-2.0 * cfg.beta().unwrap()).exp();
    let balance = (p1 / p2 - boltzmann).abs() / boltzmann;
    println!(
        "  HEOM P1/P2 = {:.4e} vs exp(-beta dE) = {boltzmann:.4e}",
        p1 / p2
    );
    assert!(balance <= 0.15, "HEOM detailed balance off by {balance:.3}");
    verdict(
        6,
        diff <= 0.1,
        &format!(
            "sigma_z(inf): HEOM {heom:.4}, MQME {mqme:.4}, difference {diff:.4} (tolerance 0.1)"
        ),
    );
}

#[test]
fn criterion_07_probe_convergence_and_non_invasiveness() {
    let cfg = preset("table1_cond_ii_dE2", MethodKind::HeomD);
    let beta = cfg.beta().unwrap();
    let model = HeomModel::from_subsystem(&cfg.subsystem().unwrap()).unwrap();
    let mut hc = cfg.heom.unwrap();
    let s = cfg.probe.as_ref().unwrap().huang_rhys;
    let initial = cfg.initial();
    let (t_sim, bare) = settle(&model, beta, &hc, &initial).unwrap();
    hc.t_sim = Some(t_sim);

    let mut worst_change: f64 = 0.0;
    let mut worst_invasion: f64 = 0.0;
    for omega in [0.5, 1.0, 2.0] {
        let full = probe_run(
            &model,
            beta,
            &hc,
            &initial,
            &ProbeModeSpec::new(0, omega, s, beta).unwrap(),
            t_sim,
        )
        .unwrap();
        let half = probe_run(
            &model,
            beta,
            &hc,
            &initial,
            &ProbeModeSpec::new(0, omega, s / 2.0, beta).unwrap(),
            t_sim,
        )
        .unwrap();
        let change = (half.steady() - full.steady()).abs() / full.steady().abs();
        for run in [&full, &half] {
            for (k, &t) in run.trajectory.times.iter().enumerate() {
                let j = bare
                    .times
                    .iter()
                    .position(|&u| (u - t).abs() < 1e-9)
                    .expect("shared output lattice");
                for (a, b) in run.trajectory.populations[k]
                    .iter()
                    .zip(&bare.populations[j])
                {
                    worst_invasion = worst_invasion.max((a - b).abs());
                }
            }
        }
        println!(
            "  w = {omega}: E(s) = {:.6e}, E(s/2) = {:.6e}, relative change {change:.3e}",
            full.steady(),
            half.steady()
        );
        worst_change = worst_change.max(change);
    }
    verdict(
        7,
        worst_change <= 0.01 && worst_invasion <= 1e-4,
        &format!(
            "t_sim = {t_sim}: worst change on halving s_bp {worst_change:.3e} (tolerance 1%), \
             worst population shift from the probe {worst_invasion:.3e} (tolerance 1e-4)"
        ),
    );
}

#[test]
fn criterion_08_tss_improves_low_frequency_agreement() {
    let name = "table1_cond_iii_dE2";
    let low = grid(0.1, 0.5, 0.1);
    let mut dirs = Vec::new();
    for method in [MethodKind::HeomD, MethodKind::MqmeD, MethodKind::MqmeDTss] {
        let mut cfg = preset(name, method);
        cfg.frequencies = low;
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&cfg, dir.path()).unwrap();
        assert!(report.passed(), "{method:?}: {:?}", report.failures);
        dirs.push(dir);
    }
    // MQME-D gives both molecules the same grid, so the oracle is the
    // average over the two molecules; the per-molecule sum is reported too.
    let distances = |dir: &Path| -> (f64, f64) {
        let r = compare_dirs(dirs[0].path(), dir, false).unwrap();
        for c in &r.channels {
            println!("  molecule {}: oracle {:?}, model {:?}", c.label, c.a, c.b);
        }
        let n = r.channels.len() as f64;
        let omegas = &r.channels[0].omegas;
        let mean = |f: fn(&ChannelComparison) -> &Vec<f64>| -> Vec<f64> {
            (0..omegas.len())
                .map(|k| r.channels.iter().map(|c| f(c)[k]).sum::<f64>() / n)
                .collect()
        };
        let averaged = l1_distance(omegas, &mean(|c| &c.a), &mean(|c| &c.b));
        (averaged, r.channels.iter().map(|c| c.l1).sum())
    };
    let (bare, bare_sum) = distances(dirs[1].path());
    let (tss, tss_sum) = distances(dirs[2].path());
    verdict(
        8,
        tss < bare,
        &format!(
            "L1 to the molecule-averaged HEOM-D oracle on [0.1, 0.5]: MQME-D+TSS {tss:.4e}, \
             bare MQME-D {bare:.4e} (summed per molecule: {tss_sum:.4e} vs {bare_sum:.4e})"
        ),
    );
}

fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[test]
fn criterion_09_tss_smooths_spin_boson() {
    let name = "table2_cond_ii_gamma0.25";
    let mut tv = Vec::new();
    for method in [MethodKind::MqmeD, MethodKind::MqmeDTss] {
        let mut cfg = preset(name, method);
        cfg.frequencies = grid(1.8, 2.2, 0.005);
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&cfg, dir.path()).unwrap();
        let t = read_steady(dir.path()).unwrap();
        tv.push(total_variation(&t[0].values));
    }
    verdict(
        9,
        tv[1] < tv[0],
        &format!(
            "total variation on [1.8, 2.2]: MQME-D+TSS {:.4e}, bare MQME-D {:.4e}",
            tv[1], tv[0]
        ),
    );
}

#[test]
fn criterion_10_determinism_across_workers() {
    let mut configs = Vec::new();
    let mut bare = preset("table1_cond_ii_dE2", MethodKind::MqmeD);
    bare.frequencies = grid(0.5, 2.5, 0.5);
    configs.push(bare);
    let mut tss = preset("table1_cond_iii_dE2", MethodKind::MqmeDTss);
    tss.frequencies = grid(0.1, 2.5, 0.2);
    tss.tss.as_mut().unwrap().trajectories = 64;
    configs.push(tss);
    let mut probe = preset("table1_cond_ii_dE2", MethodKind::HeomD);
    probe.frequencies = grid(1.0, 2.0, 1.0);
    let h = probe.heom.as_mut().unwrap();
    h.n_hier = 3;
    h.t_sim = Some(20.0);
    configs.push(probe);

    let mut mismatches = Vec::new();
    let mut compared = 0;
    for cfg in &configs {
        let dirs: Vec<_> = [1, 2, 8]
            .into_iter()
            .map(|w| {
                let dir = tempfile::tempdir().unwrap();
                with_workers(w, || run_experiment(cfg, dir.path()))
                    .unwrap()
                    .unwrap();
                dir
            })
            .collect();
        for name in manifest(dirs[0].path())["files"].as_array().unwrap() {
            let name = name.as_str().unwrap();
            let reference = std::fs::read(dirs[0].path().join(name)).unwrap();
            for d in &dirs[1..] {
                compared += 1;
                if std::fs::read(d.path().join(name)).unwrap() != reference {
                    mismatches.push(format!("{} {name}", cfg.method.name()));
                }
            }
        }
    }
    verdict(
        10,
        mismatches.is_empty(),
        &format!(
            "{compared} file comparisons across 1, 2 and 8 workers, mismatches: {mismatches:?}"
        ),
    );
}
