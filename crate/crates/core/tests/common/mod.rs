#![allow(dead_code)]

use std::f64::consts::PI;

use doa_core::{AngleSet, CoefVector, DMatrix, SignalWeight, SubspaceDecomposition, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

/// Random angles in (-π, π] with the given minimum circular separation.
pub fn random_angles(rng: &mut impl Rng, r: usize, min_sep: f64) -> AngleSet {
    loop {
        let mut v: Vec<f64> = (0..r).map(|_| rng.random_range(-PI + 1e-9..PI)).collect();
        v.sort_by(f64::total_cmp);
        let ok = v.windows(2).all(|w| w[1] - w[0] >= min_sep)
            && (r < 2 || v[0] + 2.0 * PI - v[r - 1] >= min_sep);
        if ok {
            return AngleSet::new(v).unwrap();
        }
    }
}

/// Random m x r matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal(rng: &mut impl Rng, m: usize, r: usize) -> DMatrix<C64> {
    random_matrix(rng, m, r).qr().q()
}

pub fn random_coefs(rng: &mut impl Rng, q: usize) -> CoefVector {
    let mut v: Vec<C64> = (0..=q).map(|_| cn(rng)).collect();
    if v[0].norm() < 0.1 {
        v[0] = C64::new(1.0, 0.0);
    }
    CoefVector::new(v).unwrap()
}

pub fn random_nonzero(rng: &mut impl Rng) -> C64 {
    loop {
        let z = cn(rng) * 2.0;
        if z.norm() > 1e-2 {
            return z;
        }
    }
}

pub fn random_psd(rng: &mut impl Rng, m: usize) -> DMatrix<C64> {
    let b = random_matrix(rng, m, m);
    &b * b.adjoint()
}

/// A decomposition built from arbitrary orthonormal U and positive weights.
pub fn random_subspace(rng: &mut impl Rng, m: usize, r: usize) -> (SubspaceDecomposition, SignalWeight) {
    let u = random_orthonormal(rng, m, r);
    let g: Vec<f64> = (0..r).map(|_| rng.random_range(0.05..5.0)).collect();
    let decomp = SubspaceDecomposition {
        u_signal: u,
        lambdas: vec![1.0; r],
        sigma2: 0.0,
        all_eigenvalues: vec![1.0; m],
    };
    (decomp, SignalWeight::new(g).unwrap())
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
