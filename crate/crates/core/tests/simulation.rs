mod common;

use attraos_core::chaos_sim::*;
use attraos_core::Error;
use proptest::prelude::*;

fn l63(x0: [f64; 3], dt: f64, steps: usize) -> Trajectory {
    simulate_lorenz63(&Lorenz63Params::default(), x0, dt, steps).unwrap()
}

#[test]
fn lorenz63_origin_is_fixed() {
    let traj = l63([0.0; 3], 0.01, 10_000);
    assert_eq!(traj.len(), 10_001);
    assert!(traj.states.iter().all(|s| s == &[0.0, 0.0, 0.0]));
}

#[test]
fn lorenz96_fixed_points() {
    let p = Lorenz96Params { forcing_f: 0.0, dim: 8 };
    let traj = simulate_lorenz96(&p, &[0.0; 8], 0.01, 1000).unwrap();
    assert!(traj.states.iter().all(|s| s.iter().all(|&v| v == 0.0)));
    let p = Lorenz96Params::default();
    let traj = simulate_lorenz96(&p, &[8.0; 40], 0.01, 10_000).unwrap();
    assert!(traj.states.iter().all(|s| s.iter().all(|&v| v == 8.0)));
}

#[test]
fn lorenz63_stays_on_attractor() {
    let traj = l63([1.0; 3], 0.01, 10_000);
    assert!(traj.states.iter().flatten().all(|v| v.is_finite() && v.abs() < 60.0));
}

fn rk4_step_oracle(s: [f64; 3], h: f64) -> [f64; 3] {
    let f = |s: [f64; 3]| [10.0 * (s[1] - s[0]), s[0] * (28.0 - s[2]) - s[1], s[0] * s[1] - 8.0 / 3.0 * s[2]];
    let add = |a: [f64; 3], b: [f64; 3], k: f64| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]];
    let k1 = f(s);
    let k2 = f(add(s, k1, h / 2.0));
    let k3 = f(add(s, k2, h / 2.0));
    let k4 = f(add(s, k3, h));
    [0, 1, 2].map(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[test]
fn one_step_matches_fine_reference() {
    let coarse = l63([1.0; 3], 0.01, 1);
    let oracle = rk4_step_oracle([1.0; 3], 0.01);
    assert!(common::max_abs_diff(&coarse.states[1], &oracle) < 1e-13);
    let local_error = |dt: f64| {
        let one = l63([1.0; 3], dt, 1);
        let fine = l63([1.0; 3], dt / 1000.0, 1000);
        common::max_abs_diff(&one.states[1], fine.states.last().unwrap())
    };
    let e = local_error(0.01);
    assert!(e < 3e-6, "local error {e}");
    let ratio = e / local_error(0.005);
    assert!(ratio >= 16.0, "local error ratio {ratio}");
}

#[test]
fn rk4_is_fourth_order() {
    let reference = l63([1.0; 3], 1e-6, 1_000_000);
    let target = reference.states.last().unwrap();
    let err = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let end = l63([1.0; 3], dt, steps).states.last().unwrap().clone();
        common::max_abs_diff(&end, target)
    };
    for dt in [0.01, 0.005] {
        let ratio = err(dt) / err(dt / 2.0);
        assert!(ratio >= 8.0, "dt {dt}: ratio {ratio}");
    }
}

#[test]
fn lorenz96_range_after_transient() {
    let mut x0 = vec![8.0; 40];
    x0[0] = 8.01;
    let traj = simulate_lorenz96(&Lorenz96Params::default(), &x0, 0.01, 30_000)
        .unwrap()
        .discard_transient(1000);
    let values: Vec<f64> = traj.states.iter().flatten().copied().collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo >= -15.0 && hi <= 20.0, "range [{lo}, {hi}]");
    // not periodic: no late state revisits the first retained one
    let first = &traj.states[0];
    let closest = traj.states[100..]
        .iter()
        .map(|s| common::max_abs_diff(s, first))
        .fold(f64::INFINITY, f64::min);
    assert!(closest > 1e-3);
}

#[test]
fn lorenz96_rejects_small_dimension() {
    let p = Lorenz96Params { forcing_f: 8.0, dim: 3 };
    assert!(matches!(
        simulate_lorenz96(&p, &[1.0; 3], 0.01, 10),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn blow_up_is_an_error() {
    let p = Lorenz63Params {
        sigma: 10.0,
        rho: 28.0,
        beta: 8.0 / 3.0,
    };
    let r = simulate_lorenz63(&p, [1e150, 1e150, 1e150], 0.01, 100);
    assert!(matches!(r, Err(Error::NonFinite { .. })));
}

#[test]
fn observation_examples() {
    let traj = l63([1.0; 3], 0.01, 50);
    let same = observe(&traj, &ObservationMap::identity(3)).unwrap();
    assert_eq!(same.rows(), traj.states);
    let zero = ObservationMap {
        weights: vec![vec![0.0; 3]; 2],
        seed: 0,
    };
    let z = observe(&traj, &zero).unwrap();
    assert!(z.channels().iter().flatten().all(|&v| v == 0.0));
    assert!(matches!(
        observe(&traj, &ObservationMap::identity(4)),
        Err(Error::DimensionMismatch { .. })
    ));
    let mut x0 = vec![8.0; 40];
    x0[0] = 8.01;
    let t96 = simulate_lorenz96(&Lorenz96Params::default(), &x0, 0.01, 200).unwrap();
    let a = observe(&t96, &ObservationMap::random(3, 40, 11).unwrap()).unwrap();
    let b = observe(&t96, &ObservationMap::random(3, 40, 11).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(ObservationMap::random(41, 40, 11).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integration_is_deterministic(x in -10.0f64..10.0, y in -10.0f64..10.0, z in 0.0f64..40.0, steps in 1usize..300) {
        let a = l63([x, y, z], 0.01, steps);
        let b = l63([x, y, z], 0.01, steps);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.states[0], &vec![x, y, z]);
        prop_assert_eq!(a.len(), steps + 1);
    }
}
