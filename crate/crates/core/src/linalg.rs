//! Small dense helpers over `nalgebra` shared by the numerical modules.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::C64;

/// Condition number above which a Gram matrix is treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[cfg(test)]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// (M + M*) / 2
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `i` of the returned matrix pairs with value `i`.
pub fn hermitian_eigen_desc(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in Hermitian matrix".into()));
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// 2-norm condition number of a Hermitian positive semidefinite matrix.
pub fn hermitian_condition(m: &DMatrix<C64>) -> Result<f64> {
    let (values, _) = hermitian_eigen_desc(m)?;
    let max = values.first().copied().unwrap_or(0.0);
    let min = values.last().copied().unwrap_or(0.0);
    if max <= 0.0 || min <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Cholesky factor of a Hermitian positive definite Gram matrix, refusing
/// matrices whose condition number exceeds [`MAX_GRAM_CONDITION`].
pub fn guarded_cholesky(
    gram: DMatrix<C64>,
    what: &'static str,
) -> Result<(Cholesky<C64, Dyn>, f64)> {
    let condition = hermitian_condition(&gram)?;
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::Singular { what, condition });
    }
    let chol = Cholesky::new(hermitian_part(&gram)).ok_or(Error::Singular { what, condition })?;
    Ok((chol, condition))
}

/// Real part of the trace.
pub fn trace_re(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}
