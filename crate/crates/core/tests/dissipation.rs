mod common;

use dissipath_core::bath::*;
use dissipath_core::dissipation::*;
use dissipath_core::mqme::*;
use dissipath_core::numeric::{trapezoid_nonuniform, uniform_grid};

fn dimer_grid() -> Vec<f64> {
    uniform_grid(0.1, 3.0, 0.05)
}

fn run(cond: usize, de: f64, settings: &RunSettings) -> Realization {
    let (sub, beta) = common::dimer(cond, de);
    let model = PreparedModel::new(sub, beta, QuadratureSpec::default()).unwrap();
    let energies = model.subsystem().energies().to_vec();
    let rates = model.rates(&energies).unwrap();
    let t_end = PreparedModel::resolve_t_end(settings.horizon, &rates.matrix).unwrap();
    model.realize(&energies, settings, t_end).unwrap()
}

#[test]
fn potential_is_independent_of_coupling_and_symmetric_for_homodimer() {
    let bath = common::drude_bath(0.2);
    let omegas = dimer_grid();
    let weak = Subsystem::dimer(0.0, 0.0, 0.1, bath.clone(), bath.clone()).unwrap();
    let strong = Subsystem::dimer(0.0, 0.0, 0.7, bath.clone(), bath).unwrap();
    let shapes = LineShapes::new(&weak, 1.0, QuadratureSpec::default()).unwrap();
    let i_weak = dissipative_potential(&weak, 0, 1, &shapes, &omegas).unwrap();
    let i_strong = dissipative_potential(&strong, 0, 1, &shapes, &omegas).unwrap();
    assert_eq!(i_weak.values, i_strong.values);
    let back = dissipative_potential(&weak, 1, 0, &shapes, &omegas).unwrap();
    assert_eq!(i_weak.values, back.values);
}

#[test]
fn spectral_density_inverts_to_potential() {
    let (sub, beta) = common::dimer(1, 2.0);
    let shapes = LineShapes::new(&sub, beta, QuadratureSpec::default()).unwrap();
    let omegas = dimer_grid();
    let pot = dissipative_potential(&sub, 0, 1, &shapes, &omegas).unwrap();
    let j1 = dissipative_spectral_density(&sub, 0, &pot).unwrap();
    let j2 = dissipative_spectral_density(&sub, 1, &pot).unwrap();
    assert_eq!(j1, j2);
    let density = sub.channels()[0].bath.source();
    for ((&w, &j), &i) in omegas.iter().zip(&j1).zip(&pot.values) {
        let recovered = j * w / density.value(w);
        assert!((recovered - 2.0 * 0.25f64.powi(2) * i).abs() <= 1e-12 * (1.0 + i.abs()));
    }
    let bath = common::drude_bath(0.2);
    let uncoupled = Subsystem::dimer(2.0, 0.0, 0.0, bath.clone(), bath).unwrap();
    let zero = dissipative_spectral_density(&uncoupled, 0, &pot).unwrap();
    assert!(zero.iter().all(|&x| x == 0.0));
    assert!(
        dissipative_spectral_density(&sub, 0, &DissipativePotential { a: 1, b: 1, ..pot }).is_err()
    );
}

#[test]
fn weak_coupling_peak_sits_near_the_gap() {
    let r = run(0, 2.0, &RunSettings::new(dimer_grid(), vec![1.0, 0.0]));
    let steady = r.grids[0].steady();
    let (imax, _) = steady
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let w = r.grids[0].omegas[imax];
    assert!((1.6..=2.4).contains(&w), "peak at {w}");
}

#[test]
fn degenerate_homodimer_dissipates_nothing() {
    let settings = RunSettings::new(dimer_grid(), vec![1.0, 0.0]);
    for cond in 0..6 {
        let null = run(cond, 0.0, &settings);
        let reference = run(cond, 1.0, &settings);
        let scale = reference
            .grids
            .iter()
            .flat_map(|g| g.steady())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        for g in &null.grids {
            let worst = g
                .rate
                .iter()
                .chain(&g.cumulative)
                .fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(
                worst <= 1e-6 * scale,
                "cond {cond}: {worst} vs scale {scale}"
            );
        }
    }
}

#[test]
fn identical_baths_give_identical_grids() {
    let r = run(2, 2.0, &RunSettings::new(dimer_grid(), vec![1.0, 0.0]));
    assert_eq!(r.grids[0].rate, r.grids[1].rate);
    assert_eq!(r.grids[0].cumulative, r.grids[1].cumulative);
}

#[test]
fn grids_start_at_zero_and_reintegrate() {
    let r = run(1, 2.0, &RunSettings::new(dimer_grid(), vec![1.0, 0.0]));
    for g in &r.grids {
        for i in 0..g.omegas.len() {
            assert_eq!(g.cumulative_at(i, 0), 0.0);
        }
        let scale = g.cumulative.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let re = accumulate(g.clone());
        for (x, y) in re.cumulative.iter().zip(&g.cumulative) {
            assert!((x - y).abs() <= 1e-3 * scale);
        }
    }
}

#[test]
fn equilibrium_populations_dissipate_nothing_and_are_stationary() {
    let (sub, beta) = common::dimer(1, 2.0);
    let model = PreparedModel::new(sub, beta, QuadratureSpec::default()).unwrap();
    let energies = [2.0, 0.0];
    let rates = model.rates(&energies).unwrap();
    let p = steady_state(&rates.matrix).unwrap();
    let mut settings = RunSettings::new(dimer_grid(), p);
    settings.conservation_step = None;
    let r = model.realize(&energies, &settings, 200.0).unwrap();
    let running = run(1, 2.0, &RunSettings::new(dimer_grid(), vec![1.0, 0.0]));
    let scale = running.grids[0]
        .rate
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    for g in &r.grids {
        let nt = g.n_times();
        for i in 0..g.omegas.len() {
            let first = g.rate_at(i, 0);
            for s in 0..nt {
                assert!((g.rate_at(i, s) - first).abs() <= 1e-9 * scale);
            }
            assert!(first.abs() <= 1e-6 * scale, "w {}: {first}", g.omegas[i]);
        }
    }
}

#[test]
fn conservation_and_grid_refinement() {
    for (cond, de) in [(1, 2.0), (3, 1.0)] {
        let coarse = run(cond, de, &RunSettings::new(dimer_grid(), vec![1.0, 0.0]));
        let c = coarse.conservation.unwrap();
        assert!(c.relative_error <= 0.03, "{c:?}");
        let fine = run(
            cond,
            de,
            &RunSettings::new(uniform_grid(0.1, 3.0, 0.025), vec![1.0, 0.0]),
        );
        for (gc, gf) in coarse.grids.iter().zip(&fine.grids) {
            let ic = trapezoid_nonuniform(&gc.omegas, &gc.steady());
            let if_ = trapezoid_nonuniform(&gf.omegas, &gf.steady());
            assert!((ic / if_ - 1.0).abs() <= 5e-3, "{ic} vs {if_}");
        }
    }
}

#[test]
fn mode_rates_sum_to_gap_times_rate() {
    for (cond, de) in [(1, 2.0), (2, 1.0)] {
        let (sub, beta) = common::dimer(cond, de);
        let shapes = LineShapes::new(&sub, beta, QuadratureSpec::default()).unwrap();
        for (a, b) in [(0, 1), (1, 0)] {
            let modes = mode_dissipation_rates_for_pair(&sub, a, b, &shapes).unwrap();
            let total: f64 = modes.per_channel.iter().flatten().sum();
            let k = rate_constant(&sub, a, b, &shapes).unwrap().value;
            let expected = (sub.energy(a) - sub.energy(b)) * k;
            assert!(
                (total - expected).abs() <= 1e-3 * expected.abs(),
                "{total} vs {expected}"
            );
        }
    }
}

#[test]
fn single_mode_toy_bath_conserves_energy() {
    let dl = SpectralDensity::drude_lorentz(0.2, 0.5).unwrap();
    let toy = DiscretizedBath::from_modes(
        dl,
        15.0,
        vec![BathMode {
            frequency: 1.0,
            reorganization: 0.2,
        }],
    )
    .unwrap();
    let strong = discretize(dl, &Discretization::default()).unwrap();
    // A dense bath on the acceptor keeps the envelope decaying; the toy mode
    // sits on the donor.
    let sub = Subsystem::dimer(1.0, 0.0, 0.25, toy, strong).unwrap();
    let shapes = LineShapes::new(&sub, 1.0, QuadratureSpec::default()).unwrap();
    let modes = mode_dissipation_rates_for_pair(&sub, 0, 1, &shapes).unwrap();
    assert_eq!(modes.per_channel[0].len(), 1);
    assert!(
        (mode_dissipation_rate_constant(&sub, 0, 1, 0, 0, &shapes).unwrap()
            - modes.per_channel[0][0])
            .abs()
            <= 1e-15 * modes.per_channel[0][0].abs()
    );
    let total: f64 = modes.per_channel.iter().flatten().sum();
    let k = rate_constant(&sub, 0, 1, &shapes).unwrap().value;
    assert!((total - k).abs() <= 1e-3 * k);
}

#[test]
fn mode_path_agrees_with_density_path_after_binning() {
    let (sub, beta) = common::dimer(1, 2.0);
    let model = PreparedModel::new(sub.clone(), beta, QuadratureSpec::default()).unwrap();
    let shapes = model.shapes();
    let rates = mode_dissipation_rates(&sub, shapes).unwrap();
    let omegas = uniform_grid(0.0, 4.0, 0.01);
    let mut settings = RunSettings::new(omegas.clone(), vec![1.0, 0.0]);
    settings.conservation_step = None;
    let k = model.rates(&[2.0, 0.0]).unwrap();
    let t_end = PreparedModel::resolve_t_end(settings.horizon, &k.matrix).unwrap();
    let r = model.realize(&[2.0, 0.0], &settings, t_end).unwrap();
    let energies = mode_energies(&r.trajectory, &rates);
    let edges = uniform_grid(0.25, 3.25, 0.5);
    let freqs: Vec<f64> = sub.channels()[0]
        .bath
        .modes()
        .iter()
        .map(|m| m.frequency)
        .collect();
    let binned = bin_modes(&freqs, &energies[0], &edges);
    let steady = r.grids[0].steady();
    for (i, w) in edges.windows(2).enumerate() {
        let (lo, hi) = (
            (w[0] / 0.01).round() as usize,
            (w[1] / 0.01).round() as usize,
        );
        let avg = trapezoid_nonuniform(&omegas[lo..=hi], &steady[lo..=hi]) / (w[1] - w[0]);
        let scale = binned[i].abs().max(avg.abs());
        assert!(
            (binned[i] - avg).abs() <= 0.02 * scale,
            "bin {i}: modes {} density {avg}",
            binned[i]
        );
    }
}

#[test]
fn spin_boson_mode_energies_match_energy_loss() {
    let bo = SpectralDensity::brownian_oscillator(0.25, 2.062, 1.0).unwrap();
    let bath = discretize(bo, &Discretization::new(5000, 15.0)).unwrap();
    let sub = Subsystem::spin_boson(2.0, 0.25, bath).unwrap();
    let shapes = LineShapes::new(&sub, 1.0, QuadratureSpec::default()).unwrap();
    let rates = rate_matrix(&sub, &shapes).unwrap().matrix;
    let k_sum = rates.rate(0, 1) + rates.rate(1, 0);
    let traj = propagate_populations(&rates, &[1.0, 0.0], 0.01, 30.0 / k_sum).unwrap();
    let modes = mode_dissipation_rates(&sub, &shapes).unwrap();
    let per_mode = mode_energies(&traj, &modes);
    let total: f64 = per_mode.iter().flatten().sum();
    let loss: f64 = (0..2)
        .map(|a| sub.energy(a) * (traj.initial()[a] - traj.last()[a]))
        .sum();
    assert!((total / loss - 1.0).abs() <= 0.05, "{total} vs {loss}");
    let step = total_mode_rate(&traj, &modes, 0);
    assert_eq!(step.len(), 1);
    assert_eq!(step[0].len(), 5000);
}
