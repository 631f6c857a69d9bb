use attraos_core::scan::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar(a: f64, b: f64) -> ScanElement {
    ScanElement {
        a: Transition::Diagonal(vec![a]),
        b: DMatrix::from_element(1, 1, b),
    }
}

fn rel_err(got: &[DMatrix<f64>], want: &[DMatrix<f64>]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).amax() / w.amax().max(1e-300))
        .fold(0.0, f64::max)
}

#[test]
fn compose_examples() {
    let q = operator_compose(&scalar(2.0, 1.0), &scalar(2.0, 1.0)).unwrap();
    assert_eq!(q, scalar(4.0, 3.0));

    let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.9]);
    let c = |u: f64| ScanElement {
        a: Transition::Dense(a.clone()),
        b: DMatrix::from_row_slice(1, 2, &[u, 2.0 * u]),
    };
    let id = ScanElement::identity(1, 2);
    let r1 = operator_compose(&id, &c(1.0)).unwrap();
    assert_eq!(r1.a.to_dense(2), a);
    assert_eq!(r1.b, c(1.0).b);
    let r2 = operator_compose(&c(1.0), &c(3.0)).unwrap();
    assert!((r2.a.to_dense(2) - &a * &a).amax() < 1e-15);
    let want = (&a * c(1.0).b.transpose()).transpose() + c(3.0).b;
    assert!((r2.b - want).amax() < 1e-15);

    let bad = ScanElement::identity(1, 3);
    assert!(operator_compose(&id, &bad).is_err());
    assert!(operator_compose_gated(&id, &c(1.0), &[1.0]).is_err());
}

#[test]
fn sequential_examples() {
    let zeros = ScanInput::scalar(&[0.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    let x: Vec<f64> = sequential_scan(&zeros).iter().map(|m| m[(0, 0)]).collect();
    assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let ones = ScanInput::scalar(&[1.0; 7], &[1.0; 7]).unwrap();
    let x: Vec<f64> = sequential_scan(&ones).iter().map(|m| m[(0, 0)]).collect();
    assert_eq!(x, (1..=7).map(f64::from).collect::<Vec<_>>());
    assert!(ScanInput::scalar(&[1.0; 3], &[1.0; 2]).is_err());
}

#[test]
fn worked_example_l4() {
    let input = ScanInput::scalar(&[2.0; 4], &[1.0; 4]).unwrap();
    let x: Vec<f64> = blelloch_scan(&input).iter().map(|m| m[(0, 0)]).collect();
    assert_eq!(x, vec![1.0, 3.0, 7.0, 15.0]);

    // distinct inputs expose each term of Ā³B̄u₁ + Ā²B̄u₂ + ĀB̄u₃ + B̄u₄
    let (a, u) = (3.0, [1.0, 10.0, 100.0, 1000.0]);
    let input = ScanInput::scalar(&[a; 4], &u).unwrap();
    let x4 = blelloch_scan(&input)[3][(0, 0)];
    assert_eq!(x4, a.powi(3) * u[0] + a * a * u[1] + a * u[2] + u[3]);
    let single = ScanInput::scalar(&[0.7], &[0.25]).unwrap();
    assert_eq!(blelloch_scan(&single)[0][(0, 0)], 0.25);
    assert!(blelloch_scan(&ScanInput::scalar(&[], &[]).unwrap()).is_empty());
}

#[test]
fn scale_examples() {
    assert_eq!(scale_of(0), 0);
    assert_eq!(scale_of(4), 2);
    assert_eq!(scale_of(6), 1);
    assert_eq!(scale_of(1), 1);
    assert_eq!(scale_of(5), 3);
    assert_eq!(scale_of(8), 3);
    assert_eq!(scale_of(7), 2);
}

#[test]
fn schedule_for_eight_is_the_textbook_tree() {
    let c = |target, left| Composition { target, left };
    let want = vec![
        vec![c(2, 1), c(4, 3), c(6, 5), c(8, 7)],
        vec![c(4, 2), c(8, 6)],
        vec![c(8, 4)],
        vec![c(6, 4)],
        vec![c(1, 0), c(3, 2), c(5, 4), c(7, 6)],
    ];
    assert_eq!(tree_schedule(8), want);
}

/// Hand-listed L = 8 schedule replayed on scalar elements with gates.
fn replay_gated(a: &[f64], b: &[f64], h: &[f64]) -> Vec<f64> {
    let order = [
        (2, 1),
        (4, 3),
        (6, 5),
        (8, 7),
        (4, 2),
        (8, 6),
        (8, 4),
        (6, 4),
        (1, 0),
        (3, 2),
        (5, 4),
        (7, 6),
    ];
    let mut ta = vec![1.0];
    ta.extend_from_slice(a);
    let mut tb = vec![0.0];
    tb.extend_from_slice(b);
    for (target, left) in order {
        let gate = h[left];
        tb[target] = gate * (ta[target] * tb[left] + tb[target]);
        ta[target] *= ta[left];
    }
    tb[1..].to_vec()
}

#[test]
fn gated_scan_replays_the_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let a: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..2.0)).collect();
        let input = ScanInput::scalar(&a, &b).unwrap();
        let gates: Vec<Vec<f64>> = h.iter().map(|&v| vec![v]).collect();
        let out = hierarchical_scan(&input, &gates).unwrap();
        let want = replay_gated(&a, &b, &h);
        for (g, w) in out.states.iter().zip(&want) {
            assert!((g[(0, 0)] - w).abs() < 1e-14);
        }
        assert_eq!(out.scales, (1..=8).map(scale_of).collect::<Vec<_>>());
    }
}

#[test]
fn gate_examples() {
    let input = ScanInput::random_diagonal(37, 4, 2, 9);
    let ones = vec![vec![1.0; 4]; 37];
    assert_eq!(hierarchical_scan(&input, &ones).unwrap().states, blelloch_scan(&input));
    let zeros = vec![vec![0.0; 4]; 37];
    assert!(hierarchical_scan(&input, &zeros)
        .unwrap()
        .states
        .iter()
        .all(|s| s.iter().all(|&v| v == 0.0)));
    assert!(hierarchical_scan(&input, &ones[..36]).is_err());
    assert!(hierarchical_scan(&input, &vec![vec![1.0; 3]; 37]).is_err());
}

#[test]
fn dense_transitions_match_sequential() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 3;
    let a_seq: Vec<Transition> = (0..45)
        .map(|_| Transition::Dense(DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5))))
        .collect();
    let bu: Vec<DMatrix<f64>> = (0..45).map(|_| DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0))).collect();
    let input = ScanInput::new(a_seq, bu).unwrap();
    assert!(rel_err(&blelloch_scan(&input), &sequential_scan(&input)) < 1e-10);
}

proptest! {
    #[test]
    fn blelloch_equals_sequential(len in 1usize..=257, n in prop::sample::select(vec![1usize, 8, 64]), d in prop::sample::select(vec![1usize, 4]), seed in any::<u64>()) {
        let input = ScanInput::random_diagonal(len, n, d, seed);
        let out = blelloch_scan_counted(&input);
        prop_assert!(rel_err(&out.states, &sequential_scan(&input)) <= 1e-10);
        prop_assert!(out.compositions <= 2 * len);
    }

    #[test]
    fn composition_is_associative(seed in any::<u64>(), diag in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = if diag { 4 } else { 1 };
        let mut elem = || ScanElement {
            a: Transition::Diagonal((0..n).map(|_| rng.random_range(-1.5..1.5)).collect()),
            b: DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0)),
        };
        let (p, q, r) = (elem(), elem(), elem());
        let left = operator_compose(&operator_compose(&p, &q).unwrap(), &r).unwrap();
        let right = operator_compose(&p, &operator_compose(&q, &r).unwrap()).unwrap();
        prop_assert!((left.b - right.b).amax() <= 1e-12);
        prop_assert!((left.a.to_dense(n) - right.a.to_dense(n)).amax() <= 1e-12);
    }

    #[test]
    fn unit_gates_reproduce_blelloch(len in 1usize..130, seed in any::<u64>()) {
        let input = ScanInput::random_diagonal(len, 3, 2, seed);
        let out = hierarchical_scan(&input, &vec![vec![1.0; 3]; len]).unwrap();
        prop_assert_eq!(out.states, blelloch_scan(&input));
    }
}
