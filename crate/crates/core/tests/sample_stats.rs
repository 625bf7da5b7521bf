mod common;

use common::*;
use doa_core::{
    sample_covariance, signal_weight, simulate_snapshots, subspace_decomposition, true_covariance,
    AngleSet, DMatrix, SampleCovariance, Scenario, SnapshotSet, C64,
};
use rand::Rng;

fn scenario(m: usize, angles: Vec<f64>, noise: f64, n: usize, seed: u64) -> Scenario {
    Scenario::uncorrelated(m, AngleSet::new(angles).unwrap(), 1.0, noise, n, seed)
}

#[test]
fn large_sample_covariance_approaches_truth() {
    let s = scenario(3, vec![0.5], 1.0, 100_000, 3);
    let r = true_covariance(&s).unwrap();
    let rhat = sample_covariance(&simulate_snapshots(&s).unwrap()).unwrap();
    let err = (&rhat.matrix - &r.matrix).norm();
    assert!(err <= 0.05 * r.matrix.norm(), "error {err}");
}

#[test]
fn correlated_sources_follow_source_covariance() {
    let mut s = scenario(4, vec![-0.6, 0.8], 0.5, 100_000, 4);
    s.source_cov = DMatrix::from_row_slice(2, 2, &[
        C64::new(2.0, 0.0), C64::new(0.5, 0.5),
        C64::new(0.5, -0.5), C64::new(1.0, 0.0),
    ]);
    let r = true_covariance(&s).unwrap();
    let rhat = sample_covariance(&simulate_snapshots(&s).unwrap()).unwrap();
    assert!((&rhat.matrix - &r.matrix).norm() <= 0.05 * r.matrix.norm());
}

#[test]
fn noise_is_circular() {
    // pseudo-covariance E[y y^T] vanishes for circular data
    let s = scenario(3, vec![0.2], 1.0, 50_000, 5);
    let y = simulate_snapshots(&s).unwrap().snapshots;
    let pseudo = (&y * y.transpose()).unscale(y.ncols() as f64);
    assert!(pseudo.norm() < 0.1, "pseudo-covariance norm {}", pseudo.norm());
}

#[test]
fn sample_covariance_matches_direct_summation() {
    let mut rng = rng(6);
    for _ in 0..20 {
        let m = rng.random_range(2..=8);
        let n = rng.random_range(1..=40);
        let y = random_matrix(&mut rng, m, n);
        let got = sample_covariance(&SnapshotSet::from_matrix(y.clone())).unwrap();
        let mut oracle = DMatrix::<C64>::zeros(m, m);
        for t in (0..n).rev() {
            for i in 0..m {
                for j in 0..m {
                    oracle[(i, j)] += y[(i, t)] * y[(j, t)].conj();
                }
            }
        }
        oracle /= C64::new(n as f64, 0.0);
        let scale = oracle.norm().max(1.0);
        assert!((got.matrix - oracle).norm() <= 1e-14 * scale * (m * n) as f64);
    }
}

#[test]
fn sample_covariance_is_hermitian_psd() {
    let mut rng = rng(7);
    for _ in 0..20 {
        let m = rng.random_range(2..=8);
        let n = rng.random_range(1..=20);
        let cov = sample_covariance(&SnapshotSet::from_matrix(random_matrix(&mut rng, m, n))).unwrap();
        assert!((&cov.matrix - cov.matrix.adjoint()).norm() <= 1e-12);
        let d = subspace_decomposition(&cov, 1).unwrap();
        let max = d.all_eigenvalues[0];
        assert!(d.all_eigenvalues.iter().all(|&l| l >= -1e-10 * max));
    }
}

#[test]
fn decomposition_recovers_exact_structure() {
    let mut rng = rng(8);
    for _ in 0..50 {
        let r = rng.random_range(1..=4);
        let m = rng.random_range(r + 1..=10);
        let noise = rng.random_range(0.1..2.0);
        let angles = random_angles(&mut rng, r, 0.3);
        let s = Scenario::uncorrelated(m, angles, 1.0, noise, 1, 0);
        let cov = true_covariance(&s).unwrap();
        let d = subspace_decomposition(&cov, r).unwrap();
        assert!((d.sigma2 - noise).abs() <= 1e-10);

        let u = &d.u_signal;
        let gram = u.adjoint() * u;
        assert!((gram - DMatrix::identity(r, r)).norm() <= 1e-10);

        let lam = DMatrix::from_fn(r, r, |i, j| if i == j { C64::new(d.lambdas[i], 0.0) } else { C64::new(0.0, 0.0) });
        let noise_proj = DMatrix::identity(m, m) - u * u.adjoint();
        let rebuilt = u * lam * u.adjoint() + noise_proj * C64::new(d.sigma2, 0.0);
        assert!((rebuilt - &cov.matrix).norm() <= 1e-10);

        // signal eigenvalues of A A* + σ² I
        let a = doa_core::steering_matrix(&s.angles, m).unwrap();
        let (sig, _) = {
            let aa = SampleCovariance::from_matrix(&a * a.adjoint()).unwrap();
            let dd = subspace_decomposition(&aa, r).unwrap();
            (dd.lambdas, dd.sigma2)
        };
        for (l, s0) in d.lambdas.iter().zip(sig) {
            assert!((l - (s0 + noise)).abs() <= 1e-10);
        }
        assert!(d.lambdas.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn eigenvector_phase_gauge_is_applied() {
    let s = scenario(5, vec![-1.0, 0.4], 0.3, 200, 9);
    let cov = sample_covariance(&simulate_snapshots(&s).unwrap()).unwrap();
    let d = subspace_decomposition(&cov, 2).unwrap();
    for col in d.u_signal.column_iter() {
        let pivot = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
    }
}

#[test]
fn weights_follow_formula() {
    let s = scenario(5, vec![-1.0, 0.4], 0.3, 200, 10);
    let cov = sample_covariance(&simulate_snapshots(&s).unwrap()).unwrap();
    let d = subspace_decomposition(&cov, 2).unwrap();
    let g = signal_weight(&d).unwrap();
    for (gi, li) in g.as_slice().iter().zip(&d.lambdas) {
        assert_eq!(*gi, (li - d.sigma2).powi(2) / li);
    }
}

#[test]
fn covariance_error_scales_as_inverse_root_t() {
    let base = 200;
    let trials = 50;
    let truth = true_covariance(&scenario(4, vec![-0.3, 0.9], 1.0, 1, 0)).unwrap();
    let mean_error = |n: usize| -> f64 {
        (0..trials)
            .map(|k| {
                let s = scenario(4, vec![-0.3, 0.9], 1.0, n, 1000 + k as u64);
                let rhat = sample_covariance(&simulate_snapshots(&s).unwrap()).unwrap();
                (rhat.matrix - &truth.matrix).norm()
            })
            .sum::<f64>()
            / trials as f64
    };
    let ratio = mean_error(base) / mean_error(16 * base);
    assert!((2.5..=6.5).contains(&ratio), "error ratio {ratio}");
}
