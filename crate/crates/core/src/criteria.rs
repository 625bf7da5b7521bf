//! Subspace-fitting criteria in the coefficient domain.
//!
//! * `V_ML(c)   = tr{(TT*)^{-1} T R T*}`
//! * `V_MODE(c) = tr{(TT*)^{-1} T U G U* T*}`
//! * `V_PUMA(c) = e* W e` with `e = vec(TU)` and `W = G ⊗ (TT*)^{-1}`
//!
//! `V_PUMA` is evaluated through the explicit Kronecker weight and never
//! delegates to `V_MODE`; the two agree identically, and the test suites
//! check that on independent code paths.

use nalgebra::{DMatrix, DVector};

use crate::array_model::{
    projector_from_steering, steering_matrix, toeplitz_annihilator, AngleSet, CoefVector,
};
use crate::error::{Error, Result};
use crate::linalg::{guarded_cholesky, trace_re};
use crate::sample_stats::{SampleCovariance, SignalWeight, SubspaceDecomposition};
use crate::C64;

/// A criterion value with the condition number of the Gram matrix that was
/// inverted to compute it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionValue {
    pub value: f64,
    pub gram_condition: Option<f64>,
}

/// Column-stacking vectorization.
pub fn vec(m: &DMatrix<C64>) -> DVector<C64> {
    let (rows, cols) = m.shape();
    DVector::from_fn(rows * cols, |k, _| m[(k % rows, k / rows)])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Checks that the chain `x * y * z` is conformable.
pub fn check_conformable(x: &DMatrix<C64>, y: &DMatrix<C64>, z: &DMatrix<C64>) -> Result<()> {
    if x.ncols() != y.nrows() || y.ncols() != z.nrows() {
        return Err(Error::Validation(format!(
            "non-conformable chain {}x{} * {}x{} * {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols(),
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(())
}

fn check_subspace(decomp: &SubspaceDecomposition, weight: &SignalWeight) -> Result<()> {
    if decomp.r() != weight.len() {
        return Err(Error::Dimension(format!(
            "{} signal eigenvectors but {} weights",
            decomp.r(),
            weight.len()
        )));
    }
    Ok(())
}

/// `tr{Π⊥_A R}` with `Π⊥_A = I - A(A*A)^{-1}A*`.
pub fn v_ml_angles(angles: &AngleSet, cov: &SampleCovariance) -> Result<CriterionValue> {
    let a = steering_matrix(angles, cov.dim())?;
    let projector = projector_from_steering(&a)?;
    Ok(CriterionValue {
        value: trace_re(&(projector * &cov.matrix)),
        gram_condition: None,
    })
}

/// `tr{(TT*)^{-1} T M T*}` for an arbitrary Hermitian `m x m` matrix `M`.
pub fn weighted_trace(coefs: &CoefVector, matrix: &DMatrix<C64>) -> Result<CriterionValue> {
    let m = matrix.nrows();
    let t = toeplitz_annihilator(coefs, m)?;
    let (chol, condition) = guarded_cholesky(&t * t.adjoint(), "TT*")?;
    let fitted = &t * matrix * t.adjoint();
    Ok(CriterionValue {
        value: trace_re(&chol.solve(&fitted)),
        gram_condition: Some(condition),
    })
}

/// Coefficient-domain ML criterion.
pub fn v_ml_coefs(coefs: &CoefVector, cov: &SampleCovariance) -> Result<CriterionValue> {
    weighted_trace(coefs, &cov.matrix)
}

/// MODE criterion, evaluated as `Σ_l g_l x_l* (TT*)^{-1} x_l` over the
/// columns `x_l` of `TU`.
pub fn v_mode(
    coefs: &CoefVector,
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
) -> Result<CriterionValue> {
    check_subspace(decomp, weight)?;
    let t = toeplitz_annihilator(coefs, decomp.m())?;
    let (chol, condition) = guarded_cholesky(&t * t.adjoint(), "TT*")?;
    let tu = &t * &decomp.u_signal;
    let solved = chol.solve(&tu);
    let value = weight
        .as_slice()
        .iter()
        .enumerate()
        .map(|(l, &g)| g * tu.column(l).dotc(&solved.column(l)).re)
        .sum();
    Ok(CriterionValue {
        value,
        gram_condition: Some(condition),
    })
}

/// PUMA criterion `e* W e` built from an explicit `W = G ⊗ (TT*)^{-1}`.
pub fn v_puma(
    coefs: &CoefVector,
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
) -> Result<CriterionValue> {
    check_subspace(decomp, weight)?;
    let t = toeplitz_annihilator(coefs, decomp.m())?;
    let rows = t.nrows();
    let (chol, condition) = guarded_cholesky(&t * t.adjoint(), "TT*")?;
    let gram_inv = chol.solve(&DMatrix::identity(rows, rows));
    let g = DMatrix::from_diagonal(&DVector::from_iterator(
        weight.len(),
        weight.as_slice().iter().map(|&x| C64::new(x, 0.0)),
    ));
    let w = kron(&g, &gram_inv);
    let e = vec(&(&t * &decomp.u_signal));
    Ok(CriterionValue {
        value: e.dotc(&(w * &e)).re,
        gram_condition: Some(condition),
    })
}
