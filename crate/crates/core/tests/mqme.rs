mod common;

use dissipath_core::mqme::*;
use dissipath_core::Error;
use proptest::prelude::*;

#[test]
fn propagator_matches_closed_form() {
    for (k12, k21) in [(3.5e-3, 2.587e-2), (0.19, 0.19), (1.0, 1e-4)] {
        let k = RateMatrix::two_level(k12, k21).unwrap();
        let t_end = 10.0 / (k12 + k21);
        let traj = propagate_populations(&k, &[1.0, 0.0], 0.01, t_end).unwrap();
        let sz = traj.sigma_z().unwrap();
        let sup = sz
            .iter()
            .enumerate()
            .map(|(i, &s)| (s - analytic_two_level(k12, k21, 1.0, traj.time(i)).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-8, "sup-norm {sup}");
    }
}

#[test]
fn steady_start_stays_put() {
    let k = RateMatrix::two_level(0.03, 0.11).unwrap();
    let p = steady_state(&k).unwrap();
    let traj = propagate_populations(&k, &p, 0.01, 500.0).unwrap();
    for row in traj.rows() {
        assert!((row[0] - p[0]).abs() <= 1e-10 && (row[1] - p[1]).abs() <= 1e-10);
    }
}

#[test]
fn three_state_chain_steady_state_matches_long_propagation() {
    // 1 <-> 2 <-> 3 with no direct 1 <-> 3 exchange.
    let k = RateMatrix::from_rows(3, vec![0.0, 0.2, 0.0, 0.5, 0.0, 0.05, 0.0, 0.3, 0.0]).unwrap();
    let p = steady_state(&k).unwrap();
    let min_rate = 0.05;
    let traj = propagate_populations(&k, &[1.0, 0.0, 0.0], 0.01, 100.0 / min_rate).unwrap();
    for (x, y) in traj.last().iter().zip(&p) {
        assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
    }
}

#[test]
fn disconnected_three_state_graph_is_structural_error() {
    let k = RateMatrix::from_rows(3, vec![0.0, 0.2, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(matches!(
        steady_state(&k),
        Err(Error::DisconnectedGenerator { dimension: 2 })
    ));
}

#[test]
fn zero_coupling_gives_zero_rate() {
    let bath = common::drude_bath(0.2);
    let sub = Subsystem::dimer(2.0, 0.0, 0.0, bath.clone(), bath).unwrap();
    let shapes = LineShapes::new(&sub, 1.0, QuadratureSpec::default()).unwrap();
    assert_eq!(rate_constant(&sub, 0, 1, &shapes).unwrap().value, 0.0);
}

#[test]
fn homodimer_rates_are_symmetric() {
    let (sub, beta) = common::dimer(1, 0.0);
    let shapes = LineShapes::new(&sub, beta, QuadratureSpec::default()).unwrap();
    let k = rate_matrix(&sub, &shapes).unwrap();
    assert_eq!(k.matrix.rate(0, 1), k.matrix.rate(1, 0));
}

#[test]
fn detailed_balance_and_monotone_relaxation() {
    for cond in 0..6 {
        for de in [1.0, 2.0] {
            let (sub, beta) = common::dimer(cond, de);
            let shapes = LineShapes::new(&sub, beta, QuadratureSpec::default()).unwrap();
            let set = rate_matrix(&sub, &shapes).unwrap();
            assert!(set.warnings().is_empty());
            let p = steady_state(&set.matrix).unwrap();
            let ratio = p[0] / p[1];
            let expected = (-beta * de).exp();
            assert!(
                (ratio / expected - 1.0).abs() <= 1e-2,
                "cond {cond} dE {de}: {ratio} vs {expected}"
            );
            let k = &set.matrix;
            let t_end = 10.0 / (k.rate(0, 1) + k.rate(1, 0));
            let traj = propagate_populations(k, &[1.0, 0.0], 0.01, t_end).unwrap();
            let sz = traj.sigma_z().unwrap();
            assert!(sz.windows(2).all(|w| w[1] <= w[0]), "sigma_z not monotone");
        }
    }
}

#[test]
fn rates_converged_in_step_and_horizon() {
    for (cond, de) in [(0, 2.0), (1, 1.0), (3, 2.0), (5, 1.0)] {
        let (sub, beta) = common::dimer(cond, de);
        let rates = |quad: QuadratureSpec| {
            let shapes = LineShapes::new(&sub, beta, quad).unwrap();
            rate_matrix(&sub, &shapes).unwrap().matrix
        };
        let base = rates(QuadratureSpec::default());
        let half = rates(QuadratureSpec {
            dt: 0.005,
            ..Default::default()
        });
        let long = rates(QuadratureSpec {
            t_int: 10_000.0,
            ..Default::default()
        });
        for (b, a) in [(0, 1), (1, 0)] {
            let k0 = base.rate(b, a);
            assert!((half.rate(b, a) / k0 - 1.0).abs() <= 1e-3);
            assert!((long.rate(b, a) / k0 - 1.0).abs() <= 1e-3);
        }
    }
}

#[test]
fn short_horizon_raises_tail_warning() {
    let (sub, beta) = common::dimer(0, 2.0);
    let quad = QuadratureSpec {
        t_int: 5.0,
        ..Default::default()
    };
    let shapes = LineShapes::new(&sub, beta, quad).unwrap();
    let k = rate_constant(&sub, 0, 1, &shapes).unwrap();
    assert!(k.tail_warning && k.tail_ratio > 1e-6);
}

fn arb_rates(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, n * n).prop_map(move |mut v| {
        for a in 0..n {
            v[a * n + a] = 0.0;
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probability_is_conserved(rates in arb_rates(4), raw in prop::collection::vec(0.01f64..1.0, 4)) {
        let k = RateMatrix::from_rows(4, rates).unwrap();
        let s: f64 = raw.iter().sum();
        let p0: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let traj = propagate_populations(&k, &p0, 0.01, 20.0).unwrap();
        for row in traj.rows() {
            let total: f64 = row.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-10);
            prop_assert!(row.iter().all(|&x| x >= -1e-12));
        }
    }
}
