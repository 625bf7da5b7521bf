//! Uniform linear array geometry in the polynomial (annihilator) parameterization.
//!
//! A ULA steering matrix is Vandermonde in the generators `e^{jφ}`. Any
//! polynomial `c(z) = c_0 + c_1 z + ... + c_q z^q` that vanishes at every
//! generator yields a banded Toeplitz matrix `T(c)` with `T(c) A(φ) = 0`, so
//! the orthogonal complement of the array manifold can be expressed through
//! the coefficients instead of the angles.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{guarded_cholesky, real};
use crate::C64;

/// Maps an angle to its principal value in `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Ascending set of electrical angles (radians) in `(-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet(Vec<f64>);

impl AngleSet {
    /// Validates and sorts the angles. Rejects empty input, values outside
    /// `(-π, π]` and repeated values.
    pub fn new(mut angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::Validation("angle set must not be empty".into()));
        }
        for &a in &angles {
            if !a.is_finite() || a <= -PI || a > PI {
                return Err(Error::Validation(format!("angle {a} outside (-pi, pi]")));
            }
        }
        angles.sort_by(f64::total_cmp);
        if angles.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("angles must be pairwise distinct".into()));
        }
        Ok(Self(angles))
    }

    /// Builds a set from estimated angles: wraps and sorts but keeps exact
    /// ties. Roots of a conjugate-symmetric polynomial that leave the unit
    /// circle come in pairs `z`, `1/z̄` sharing one argument, so an estimate
    /// may legitimately contain repeated angles.
    pub fn from_estimates(angles: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut v: Vec<f64> = angles.into_iter().map(wrap_angle).collect();
        if v.is_empty() {
            return Err(Error::Validation("angle set must not be empty".into()));
        }
        if v.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numerical("non-finite angle estimate".into()));
        }
        v.sort_by(f64::total_cmp);
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Smallest gap between neighbouring angles, `INFINITY` for a single angle.
    pub fn min_separation(&self) -> f64 {
        self.0
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// The angles at `indices`, in ascending order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }
}

/// Polynomial coefficients `c_0 ... c_q`, lowest power first, `c_0 != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector(Vec<C64>);

impl CoefVector {
    pub fn new(coefs: Vec<C64>) -> Result<Self> {
        if coefs.len() < 2 {
            return Err(Error::Validation(
                "coefficient vector needs degree at least 1".into(),
            ));
        }
        if coefs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite coefficient".into()));
        }
        if coefs[0] == C64::new(0.0, 0.0) {
            return Err(Error::Validation("c_0 must be nonzero".into()));
        }
        Ok(Self(coefs))
    }

    /// Polynomial degree q.
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn scaled(&self, alpha: C64) -> Result<Self> {
        Self::new(self.0.iter().map(|&z| z * alpha).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Evaluates `c(z)` by Horner's rule.
    pub fn eval(&self, z: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
    }

    fn eval_derivative(&self, z: C64) -> C64 {
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (k, &ck)| acc * z + ck * k as f64)
    }
}

/// `m x r` Vandermonde matrix, entry `(k, i) = exp(j k φ_i)`.
pub fn steering_matrix(angles: &AngleSet, m: usize) -> Result<DMatrix<C64>> {
    let r = angles.len();
    if m <= r {
        return Err(Error::Dimension(format!(
            "steering matrix needs more sensors than sources (m={m}, r={r})"
        )));
    }
    Ok(DMatrix::from_fn(m, r, |k, i| {
        C64::from_polar(1.0, k as f64 * angles.as_slice()[i])
    }))
}

/// Coefficients of `∏_k (1 - e^{-jφ_k} z)` with `c_0 = 1`.
pub fn coefs_from_angles(angles: &AngleSet) -> CoefVector {
    let mut coefs = vec![real(1.0)];
    for &phi in angles.as_slice() {
        let factor = -C64::from_polar(1.0, -phi);
        let mut next = vec![C64::new(0.0, 0.0); coefs.len() + 1];
        for (k, &ck) in coefs.iter().enumerate() {
            next[k] += ck;
            next[k + 1] += ck * factor;
        }
        coefs = next;
    }
    CoefVector(coefs)
}

/// Roots of `c(z)` (companion-matrix eigenvalues, Newton-polished).
pub fn polynomial_roots(coefs: &CoefVector) -> Result<Vec<C64>> {
    let c = coefs.as_slice();
    let q = coefs.degree();
    let lead = c[q];
    if lead.norm() == 0.0 {
        return Err(Error::DegenerateDegree { degree: q });
    }
    let mut companion = DMatrix::<C64>::zeros(q, q);
    for i in 1..q {
        companion[(i, i - 1)] = real(1.0);
    }
    for i in 0..q {
        companion[(i, q - 1)] = -c[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("companion eigenvalue iteration did not converge".into()))?;
    let (_, upper) = schur.unpack();
    let mut roots: Vec<C64> = (0..q).map(|i| upper[(i, i)]).collect();
    for z in &mut roots {
        polish_root(coefs, z);
    }
    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite polynomial root".into()));
    }
    Ok(roots)
}

/// A few Newton steps, keeping the iterate only while the residual shrinks.
fn polish_root(coefs: &CoefVector, z: &mut C64) {
    let mut residual = coefs.eval(*z).norm();
    for _ in 0..4 {
        let d = coefs.eval_derivative(*z);
        if d.norm() == 0.0 || residual == 0.0 {
            return;
        }
        let candidate = *z - coefs.eval(*z) / d;
        let cand_residual = coefs.eval(candidate).norm();
        if !(cand_residual < residual) {
            return;
        }
        *z = candidate;
        residual = cand_residual;
    }
}

/// Angles of the roots of `c(z)`, each root projected onto the unit circle
/// by its argument, sorted ascending in `(-π, π]`.
pub fn angles_from_coefs(coefs: &CoefVector) -> Result<AngleSet> {
    let roots = polynomial_roots(coefs)?;
    AngleSet::from_estimates(roots.iter().map(|z| z.arg()))
}

/// `(m - q) x m` banded Toeplitz annihilator, entry `(i, i + k) = c_k`.
pub fn toeplitz_annihilator(coefs: &CoefVector, m: usize) -> Result<DMatrix<C64>> {
    let q = coefs.degree();
    if m <= q {
        return Err(Error::Dimension(format!(
            "annihilator needs m > q (m={m}, q={q})"
        )));
    }
    let c = coefs.as_slice();
    Ok(DMatrix::from_fn(m - q, m, |i, j| {
        if j >= i && j - i <= q {
            c[j - i]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Projector onto the row space of `t`: `T*(TT*)^{-1}T`.
pub fn projector_from_annihilator(t: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let gram = t * t.adjoint();
    let (chol, _) = guarded_cholesky(gram, "TT*")?;
    let p = t.adjoint() * chol.solve(t);
    Ok(crate::linalg::hermitian_part(&p))
}

/// Projector onto the orthogonal complement of the columns of `a`:
/// `I - A(A*A)^{-1}A*`.
pub fn projector_from_steering(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let m = a.nrows();
    let gram = a.adjoint() * a;
    let (chol, _) = guarded_cholesky(gram, "A*A")?;
    let p = DMatrix::<C64>::identity(m, m) - a * chol.solve(&a.adjoint());
    Ok(crate::linalg::hermitian_part(&p))
}
