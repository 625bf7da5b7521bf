mod common;

use common::*;
use doa_core::{
    coefs_from_angles, kron, projector_from_annihilator, steering_matrix, toeplitz_annihilator,
    true_covariance, v_ml_angles, v_ml_coefs, v_mode, v_puma, vec, weighted_trace, DMatrix,
    SampleCovariance, Scenario, SignalWeight, C64,
};
use proptest::prelude::*;
use rand::Rng;

/// Column-major storage read directly, independent of `vec`.
fn storage_vec(m: &DMatrix<C64>) -> Vec<C64> {
    m.as_slice().to_vec()
}

fn diag(g: &SignalWeight) -> DMatrix<C64> {
    DMatrix::from_fn(g.len(), g.len(), |i, j| {
        if i == j { C64::new(g.as_slice()[i], 0.0) } else { C64::new(0.0, 0.0) }
    })
}

fn trace_re(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

#[test]
fn puma_equals_mode_on_1000_random_instances() {
    let mut rng = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(3..=12);
        let r = rng.random_range(1..=4.min(m - 1));
        let q = r;
        let (decomp, g) = random_subspace(&mut rng, m, r);
        let c = random_coefs(&mut rng, q);
        let mode = v_mode(&c, &decomp, &g).unwrap().value;
        let puma = v_puma(&c, &decomp, &g).unwrap().value;
        worst = worst.max((puma - mode).abs() / mode.max(1.0));
    }
    assert!(worst <= 1e-10, "max relative deviation {worst:e}");
}

#[test]
fn mode_equals_weighted_trace_of_signal_fit() {
    let mut rng = rng(7);
    for _ in 0..200 {
        let m = rng.random_range(3..=10);
        let r = rng.random_range(1..m.min(5));
        let (decomp, g) = random_subspace(&mut rng, m, r);
        let c = random_coefs(&mut rng, r);
        let fit = &decomp.u_signal * diag(&g) * decomp.u_signal.adjoint();
        let oracle = v_ml_coefs(&c, &SampleCovariance::from_matrix(fit).unwrap()).unwrap().value;
        let mode = v_mode(&c, &decomp, &g).unwrap().value;
        assert!((oracle - mode).abs() <= 1e-12 * oracle.max(1.0));
    }
}

#[test]
fn ml_coefs_matches_explicit_projector() {
    let mut rng = rng(8);
    for _ in 0..200 {
        let m = 4;
        let q = rng.random_range(1..m);
        let c = random_coefs(&mut rng, q);
        let cov = SampleCovariance::from_matrix(random_psd(&mut rng, m)).unwrap();
        let p = projector_from_annihilator(&toeplitz_annihilator(&c, m).unwrap()).unwrap();
        let oracle = trace_re(&(p * &cov.matrix));
        let value = v_ml_coefs(&c, &cov).unwrap().value;
        assert!((oracle - value).abs() <= 1e-12 * oracle.max(1.0), "{oracle} vs {value}");
    }
}

#[test]
fn ml_angles_matches_ml_coefs() {
    let mut rng = rng(9);
    for _ in 0..200 {
        let r = rng.random_range(1..=4);
        let m = rng.random_range(r + 1..=10);
        let angles = random_angles(&mut rng, r, 0.05);
        let cov = SampleCovariance::from_matrix(random_psd(&mut rng, m)).unwrap();
        let by_angles = v_ml_angles(&angles, &cov).unwrap().value;
        let by_coefs = v_ml_coefs(&coefs_from_angles(&angles), &cov).unwrap().value;
        assert!((by_angles - by_coefs).abs() <= 1e-10 * by_angles.max(1.0));
    }
}

#[test]
fn ml_vanishes_on_noiseless_truth() {
    let mut rng = rng(10);
    for _ in 0..50 {
        let angles = random_angles(&mut rng, 3, 0.2);
        let s = Scenario::uncorrelated(7, angles.clone(), 2.0, 0.0, 1, 0);
        let cov = true_covariance(&s).unwrap();
        assert!(v_ml_angles(&angles, &cov).unwrap().value.abs() <= 1e-10);
    }
}

#[test]
fn identity_covariance_gives_m_minus_q() {
    let mut rng = rng(11);
    for _ in 0..100 {
        let m = rng.random_range(2..=12);
        let q = rng.random_range(1..m);
        let c = random_coefs(&mut rng, q);
        let cov = SampleCovariance::from_matrix(DMatrix::identity(m, m)).unwrap();
        let v = v_ml_coefs(&c, &cov).unwrap().value;
        assert!((v - (m - q) as f64).abs() <= 1e-12, "m={m} q={q} v={v} c={:?}", c.as_slice());
        let angles = random_angles(&mut rng, q.min(4), 0.3);
        let va = v_ml_angles(&angles, &cov).unwrap().value;
        assert!((va - (m - angles.len()) as f64).abs() <= 1e-12, "m={m} {angles:?} va={va}");
    }
}

#[test]
fn vec_and_trace_lemmas() {
    let mut rng = rng(12);
    let mut worst_vec = 0.0f64;
    let mut worst_trace = 0.0f64;
    for _ in 0..200 {
        let x = random_matrix(&mut rng, 3, 4);
        let y = random_matrix(&mut rng, 4, 2);
        let z = random_matrix(&mut rng, 2, 5);
        let lhs = storage_vec(&(&x * &y * &z));
        let rhs = kron(&z.transpose(), &x) * vec(&y);
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            worst_vec = worst_vec.max((a - b).norm());
        }

        let x = random_matrix(&mut rng, 4, 3);
        let y = random_matrix(&mut rng, 4, 3);
        let tr: C64 = {
            let p = x.adjoint() * &y;
            (0..3).map(|i| p[(i, i)]).sum()
        };
        let inner = vec(&x).dotc(&vec(&y));
        worst_trace = worst_trace.max((tr - inner).norm());
    }
    assert!(worst_vec <= 1e-12, "vec lemma {worst_vec:e}");
    assert!(worst_trace <= 1e-12, "trace lemma {worst_trace:e}");
}

#[test]
fn kron_agrees_with_nalgebra() {
    let mut rng = rng(13);
    let a = random_matrix(&mut rng, 3, 2);
    let b = random_matrix(&mut rng, 2, 4);
    assert!((kron(&a, &b) - a.kronecker(&b)).norm() < 1e-14);
}

#[test]
fn vec_matches_storage_order() {
    let mut rng = rng(14);
    let a = random_matrix(&mut rng, 3, 5);
    assert_eq!(vec(&a).as_slice(), storage_vec(&a).as_slice());
}

#[test]
fn criteria_are_nonnegative() {
    let mut rng = rng(15);
    for _ in 0..200 {
        let m = rng.random_range(3..=10);
        let r = rng.random_range(1..m.min(5));
        let (decomp, g) = random_subspace(&mut rng, m, r);
        let c = random_coefs(&mut rng, r);
        let cov = SampleCovariance::from_matrix(random_psd(&mut rng, m)).unwrap();
        assert!(v_mode(&c, &decomp, &g).unwrap().value >= -1e-10);
        assert!(v_puma(&c, &decomp, &g).unwrap().value >= -1e-10);
        assert!(v_ml_coefs(&c, &cov).unwrap().value >= -1e-10);
        assert!(weighted_trace(&c, &cov.matrix).unwrap().gram_condition.unwrap() >= 1.0);
    }
}

#[test]
fn ml_angles_rejects_coincident_columns() {
    // angles 2π apart in electrical terms collapse to one column
    let cov = SampleCovariance::from_matrix(DMatrix::identity(4, 4)).unwrap();
    let a = steering_matrix(&doa_core::AngleSet::new(vec![0.5]).unwrap(), 4).unwrap();
    assert_eq!(a.ncols(), 1);
    let tied = doa_core::AngleSet::from_estimates([0.5, 0.5]).unwrap();
    assert!(matches!(v_ml_angles(&tied, &cov), Err(doa_core::Error::Singular { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn criteria_are_gauge_invariant(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = rng.random_range(3..=10);
        let r = rng.random_range(1..m.min(5));
        let (decomp, g) = random_subspace(&mut rng, m, r);
        let c = random_coefs(&mut rng, r);
        let cs = c.scaled(random_nonzero(&mut rng)).unwrap();
        let cov = SampleCovariance::from_matrix(random_psd(&mut rng, m)).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-300);
        prop_assert!(rel(v_ml_coefs(&c, &cov).unwrap().value, v_ml_coefs(&cs, &cov).unwrap().value) <= 1e-10);
        prop_assert!(rel(v_mode(&c, &decomp, &g).unwrap().value, v_mode(&cs, &decomp, &g).unwrap().value) <= 1e-10);
        prop_assert!(rel(v_puma(&c, &decomp, &g).unwrap().value, v_puma(&cs, &decomp, &g).unwrap().value) <= 1e-10);
    }

    #[test]
    fn puma_equals_mode_at_extra_degrees(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = rng.random_range(4..=12);
        let r = rng.random_range(1..(m - 1).min(5));
        let q = rng.random_range(r..m);
        let (decomp, g) = random_subspace(&mut rng, m, r);
        let c = random_coefs(&mut rng, q);
        let mode = v_mode(&c, &decomp, &g).unwrap().value;
        let puma = v_puma(&c, &decomp, &g).unwrap().value;
        prop_assert!((mode - puma).abs() <= 1e-10 * mode.max(1.0));
    }
}
