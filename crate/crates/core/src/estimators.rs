//! Minimizers of the MODE criterion and the extra-coefficient (MODEX /
//! Enhanced-PUMA) subset search.
//!
//! Every solver works on the quadratic form `c* Q(Ω) c = tr{Ω T U G U* T*}`,
//! which is linear in `c` through `vec(TU) = Φ c`. MODE fixes the gauge by
//! conjugate symmetry and unit norm and solves two eigenproblems; PUMA fixes
//! `c_0 = 1` and iterates linear solves, reweighting `Ω = (TT*)^{-1}` each
//! round.

use nalgebra::DMatrix;

use crate::array_model::{angles_from_coefs, toeplitz_annihilator, wrap_angle, AngleSet, CoefVector};
use crate::criteria::{v_ml_angles, v_mode};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_condition, hermitian_part, real, trace_re, MAX_GRAM_CONDITION};
use crate::sample_stats::{
    signal_weight, subspace_decomposition, SampleCovariance, SignalWeight, SubspaceDecomposition,
};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Two-step MODE.
    Mode,
    /// Iteratively reweighted PUMA solve.
    Puma,
    /// MODE at degree r + p followed by ML subset selection.
    Modex,
    /// PUMA at degree r + p followed by ML subset selection.
    EnhancedPuma,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mode => "mode",
            Method::Puma => "puma",
            Method::Modex => "modex",
            Method::EnhancedPuma => "epuma",
        }
    }

    pub fn uses_extra_coefficients(self) -> bool {
        matches!(self, Method::Modex | Method::EnhancedPuma)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mode" => Ok(Method::Mode),
            "puma" => Ok(Method::Puma),
            "modex" => Ok(Method::Modex),
            "epuma" | "enhanced-puma" | "enhanced_puma" => Ok(Method::EnhancedPuma),
            other => Err(Error::Validation(format!(
                "unknown method '{other}' (expected mode, puma, modex or epuma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Extra polynomial coefficients; must satisfy `p_extra < m - r`.
    pub p_extra: usize,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    /// Reweighted solves after the classic second MODE step.
    pub mode_extra_reweights: usize,
    /// MODEX/Enhanced-PUMA only: also offer the r angles of the degree-r
    /// solve to the subset search, next to the r + p extended-degree roots.
    pub modex_include_base: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: Method::Mode,
            p_extra: 0,
            max_iterations: 20,
            relative_tolerance: 1e-10,
            mode_extra_reweights: 0,
            modex_include_base: true,
        }
    }
}

impl EstimatorConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_p_extra(mut self, p_extra: usize) -> Self {
        self.p_extra = p_extra;
        self
    }

    pub fn validate(&self, m: usize, r: usize) -> Result<()> {
        if r == 0 || r >= m {
            return Err(Error::Dimension(format!("need 0 < r < m (m={m}, r={r})")));
        }
        if self.p_extra > 0 && !self.method.uses_extra_coefficients() {
            return Err(Error::Validation(format!(
                "p_extra={} is only meaningful for modex/epuma",
                self.p_extra
            )));
        }
        if self.p_extra >= m - r {
            return Err(Error::Validation(format!(
                "p_extra must satisfy p < m - r, got p={} with m={m}, r={r}",
                self.p_extra
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be positive".into()));
        }
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::Validation("relative_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// ML score of one r-subset of the MODEX candidate angles.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub indices: Vec<usize>,
    pub angles: AngleSet,
    /// `+inf` when the subset has coincident angles.
    pub v_ml: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub angles: AngleSet,
    /// Coefficients at the degree the solver used (r, or r + p for MODEX).
    pub coefs: CoefVector,
    /// `v_mode(coefs)` for MODE/PUMA, `v_ml_angles(angles)` for MODEX.
    pub criterion_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// `v_mode` after each solve.
    pub criterion_history: Vec<f64>,
    pub candidate_log: Option<Vec<CandidateScore>>,
}

/// Builds `Q = Φ*(G ⊗ Ω)Φ` with `vec(T(c) U) = Φ c`, so that
/// `c* Q c = tr{Ω T U G U* T*}` for every degree-q coefficient vector.
pub fn quadratic_form_matrix(
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
    omega: &DMatrix<C64>,
    q: usize,
) -> Result<DMatrix<C64>> {
    let m = decomp.m();
    if q == 0 || q >= m {
        return Err(Error::Dimension(format!("need 0 < q < m (m={m}, q={q})")));
    }
    let rows = m - q;
    if omega.shape() != (rows, rows) {
        return Err(Error::Dimension(format!(
            "omega must be {rows}x{rows}, got {}x{}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    if weight.len() != decomp.r() {
        return Err(Error::Dimension(format!(
            "{} signal eigenvectors but {} weights",
            decomp.r(),
            weight.len()
        )));
    }
    let u = &decomp.u_signal;
    let mut q_mat = DMatrix::<C64>::zeros(q + 1, q + 1);
    for (l, &g) in weight.as_slice().iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        // Hankel block: phi[(i, k)] = U[(i + k, l)]
        let phi = DMatrix::from_fn(rows, q + 1, |i, k| u[(i + k, l)]);
        q_mat += (phi.adjoint() * omega * &phi).scale(g);
    }
    Ok(hermitian_part(&q_mat))
}

/// `(TT*)^{-1}` for the current iterate. Ill-conditioned Gram matrices get a
/// ridge `ε = 1e-12 · tr(TT*) / (m - q)`; `None` if that still fails.
fn reweight(coefs: &CoefVector, m: usize) -> Result<Option<DMatrix<C64>>> {
    let t = toeplitz_annihilator(coefs, m)?;
    let rows = t.nrows();
    let mut gram = hermitian_part(&(&t * t.adjoint()));
    if hermitian_condition(&gram)? > MAX_GRAM_CONDITION {
        let eps = 1e-12 * trace_re(&gram) / rows as f64;
        for i in 0..rows {
            gram[(i, i)] += real(eps);
        }
        if !(hermitian_condition(&gram)? <= MAX_GRAM_CONDITION) {
            return Ok(None);
        }
    }
    Ok(nalgebra::Cholesky::new(gram).map(|chol| chol.inverse()))
}

/// Orthonormal map from real parameters to conjugate-symmetric coefficient
/// vectors (`c_k = conj(c_{q-k})`).
fn conjugate_symmetric_basis(q: usize) -> DMatrix<C64> {
    let n = q + 1;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = DMatrix::<C64>::zeros(n, n);
    let mut col = 0;
    for k in 0..n / 2 {
        let mirror = q - k;
        basis[(k, col)] = real(s);
        basis[(mirror, col)] = real(s);
        basis[(k, col + 1)] = C64::new(0.0, s);
        basis[(mirror, col + 1)] = C64::new(0.0, -s);
        col += 2;
    }
    if q.is_multiple_of(2) {
        basis[(q / 2, col)] = real(1.0);
    }
    basis
}

/// Unit-norm conjugate-symmetric minimizer of `c* Q c`.
fn conjugate_symmetric_minimizer(q_mat: &DMatrix<C64>) -> Result<CoefVector> {
    let q = q_mat.nrows() - 1;
    let basis = conjugate_symmetric_basis(q);
    let reduced = (basis.adjoint() * q_mat * &basis).map(|z| z.re);
    let reduced = (&reduced + reduced.transpose()).scale(0.5);
    let eig = nalgebra::linalg::SymmetricEigen::try_new(reduced, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("MODE eigenproblem did not converge".into()))?;
    let min_idx = eig.eigenvalues.argmin().0;
    let rho = eig.eigenvectors.column(min_idx).map(real);
    let mut c = &basis * rho;
    // fix the ± sign so the result is reproducible
    if c[0].re < 0.0 || (c[0].re == 0.0 && c[0].im < 0.0) {
        c.neg_mut();
    }
    CoefVector::new(c.iter().copied().collect())
        .map_err(|_| Error::Numerical("MODE solution has c_0 = 0".into()))
}

/// Minimizer of `c* Q c` subject to `c_0 = 1`: solves `Q_tt x = -Q_t0` in
/// the least-squares sense so rank-deficient forms still give an answer.
fn leading_one_minimizer(q_mat: &DMatrix<C64>) -> Result<CoefVector> {
    let n = q_mat.nrows();
    let q_tt = q_mat.view((1, 1), (n - 1, n - 1)).into_owned();
    let rhs = -q_mat.view((1, 0), (n - 1, 1)).into_owned();
    let svd = q_tt.svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max();
    let x = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::Numerical(format!("PUMA linear solve failed: {e}")))?;
    let mut coefs = Vec::with_capacity(n);
    coefs.push(real(1.0));
    coefs.extend(x.iter().copied());
    CoefVector::new(coefs).map_err(|_| Error::Numerical("PUMA solve produced non-finite coefficients".into()))
}

struct SolverOutput {
    coefs: CoefVector,
    criterion: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn check_decomp(decomp: &SubspaceDecomposition, weight: &SignalWeight, r: usize) -> Result<()> {
    if decomp.r() != r || weight.len() != r {
        return Err(Error::Dimension(format!(
            "r={r} but decomposition has {} eigenvectors and {} weights",
            decomp.r(),
            weight.len()
        )));
    }
    Ok(())
}

fn mode_at_degree(
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
    q: usize,
    config: &EstimatorConfig,
) -> Result<SolverOutput> {
    let m = decomp.m();
    let steps = 2 + config.mode_extra_reweights;
    let mut omega = DMatrix::<C64>::identity(m - q, m - q);
    let mut history = Vec::with_capacity(steps);
    let mut coefs = conjugate_symmetric_minimizer(&quadratic_form_matrix(decomp, weight, &omega, q)?)?;
    history.push(v_mode(&coefs, decomp, weight)?.value);
    let mut converged = true;
    for _ in 1..steps {
        match reweight(&coefs, m)? {
            Some(w) => omega = w,
            None => {
                converged = false;
                break;
            }
        }
        coefs = conjugate_symmetric_minimizer(&quadratic_form_matrix(decomp, weight, &omega, q)?)?;
        history.push(v_mode(&coefs, decomp, weight)?.value);
    }
    Ok(SolverOutput {
        criterion: *history.last().expect("at least one step"),
        iterations: history.len(),
        coefs,
        converged,
        history,
    })
}

/// Step-halving attempts before an uphill PUMA update is declared a failure.
const MAX_BACKTRACKS: usize = 30;

fn puma_at_degree(
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
    q: usize,
    config: &EstimatorConfig,
) -> Result<SolverOutput> {
    let m = decomp.m();
    let scale: f64 = weight.as_slice().iter().sum();
    let floor = f64::EPSILON * scale;
    let identity = DMatrix::<C64>::identity(m - q, m - q);

    let mut coefs = leading_one_minimizer(&quadratic_form_matrix(decomp, weight, &identity, q)?)?;
    let mut value = v_mode(&coefs, decomp, weight)?.value;
    let mut history = vec![value];
    let mut converged = false;

    while history.len() < config.max_iterations {
        let Some(omega) = reweight(&coefs, m)? else {
            break;
        };
        let mut next = leading_one_minimizer(&quadratic_form_matrix(decomp, weight, &omega, q)?)?;
        let mut next_value = v_mode(&next, decomp, weight)?.value;
        let change = (next_value - value).abs();
        if change <= config.relative_tolerance * value.abs() || change <= floor {
            if next_value < value {
                coefs = next;
                value = next_value;
            }
            history.push(value);
            converged = true;
            break;
        }
        if next_value > value {
            // the reweighted solve went uphill: backtrack towards the current
            // iterate along the update (c_0 = 1 is preserved)
            match backtrack(&coefs, &next, value, decomp, weight)? {
                Some((c, v)) => {
                    let gain = value - v;
                    next = c;
                    next_value = v;
                    if gain <= config.relative_tolerance * value.abs() || gain <= floor {
                        coefs = next;
                        value = next_value;
                        history.push(value);
                        converged = true;
                        break;
                    }
                }
                None => {
                    // no step along the update descends: the safeguarded
                    // iteration maps the current iterate to itself
                    converged = true;
                    break;
                }
            }
        }
        coefs = next;
        value = next_value;
        history.push(value);
    }

    Ok(SolverOutput {
        coefs,
        criterion: value,
        iterations: history.len(),
        converged,
        history,
    })
}

fn backtrack(
    from: &CoefVector,
    to: &CoefVector,
    value: f64,
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
) -> Result<Option<(CoefVector, f64)>> {
    let mut step = 0.5;
    for _ in 0..MAX_BACKTRACKS {
        let blend: Vec<C64> = from
            .as_slice()
            .iter()
            .zip(to.as_slice())
            .map(|(&a, &b)| a + (b - a) * step)
            .collect();
        let candidate = CoefVector::new(blend)?;
        let v = v_mode(&candidate, decomp, weight)?.value;
        if v < value {
            return Ok(Some((candidate, v)));
        }
        step *= 0.5;
    }
    Ok(None)
}

fn finish(out: SolverOutput) -> Result<EstimationResult> {
    Ok(EstimationResult {
        angles: angles_from_coefs(&out.coefs)?,
        coefs: out.coefs,
        criterion_value: out.criterion,
        iterations_used: out.iterations,
        converged: out.converged,
        criterion_history: out.history,
        candidate_log: None,
    })
}

/// Two-step MODE: an unweighted (`Ω = I`) solve followed by a solve weighted
/// with `(T T*)^{-1}` at the first estimate, plus any configured extra
/// reweights.
pub fn mode_two_step(
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
    r: usize,
    config: &EstimatorConfig,
) -> Result<EstimationResult> {
    check_decomp(decomp, weight, r)?;
    config.validate(decomp.m(), r)?;
    finish(mode_at_degree(decomp, weight, r, config)?)
}

/// PUMA: iteratively reweighted minimization of the MODE criterion under the
/// `c_0 = 1` gauge. An update that raises the criterion is backtracked, so
/// the recorded history never increases. When no step along the update goes
/// downhill the iterate is a fixed point of the safeguarded update and the
/// iteration stops as converged.
pub fn puma_iterative(
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
    r: usize,
    config: &EstimatorConfig,
) -> Result<EstimationResult> {
    check_decomp(decomp, weight, r)?;
    config.validate(decomp.m(), r)?;
    finish(puma_at_degree(decomp, weight, r, config)?)
}

/// Lexicographic r-subsets of `0..n`.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..r).rev().find(|&i| idx[i] != i + n - r) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Extra-coefficient estimator. Solves at degree `r + p_extra` with the same
/// size-r subspace and weights, then keeps the r-subset of candidate angles
/// that minimizes the ML criterion on `cov`. The candidates are the
/// `r + p_extra` extended-degree roots, preceded by the r angles of the
/// plain degree-r solve when `modex_include_base` is set and `p_extra > 0`.
pub fn modex(
    cov: &SampleCovariance,
    decomp: &SubspaceDecomposition,
    weight: &SignalWeight,
    r: usize,
    config: &EstimatorConfig,
) -> Result<EstimationResult> {
    check_decomp(decomp, weight, r)?;
    if cov.dim() != decomp.m() {
        return Err(Error::Dimension("covariance and decomposition sizes differ".into()));
    }
    let m = decomp.m();
    if config.p_extra >= m - r {
        return Err(Error::Validation(format!(
            "p_extra must satisfy p < m - r, got p={} with m={m}, r={r}",
            config.p_extra
        )));
    }
    let solve = |q: usize| match config.method {
        Method::Puma | Method::EnhancedPuma => puma_at_degree(decomp, weight, q, config),
        Method::Mode | Method::Modex => mode_at_degree(decomp, weight, q, config),
    };
    let extended = solve(r + config.p_extra)?;
    let mut pool = Vec::with_capacity(2 * r + config.p_extra);
    if config.modex_include_base && config.p_extra > 0 {
        pool.extend_from_slice(angles_from_coefs(&solve(r)?.coefs)?.as_slice());
    }
    pool.extend_from_slice(angles_from_coefs(&extended.coefs)?.as_slice());
    // unsorted on purpose: indices in the log refer to this order
    let log: Vec<CandidateScore> = combinations(pool.len(), r)
        .into_iter()
        .map(|indices| {
            let angles = AngleSet::from_estimates(indices.iter().map(|&i| pool[i]))?;
            let v_ml = v_ml_angles(&angles, cov).map_or(f64::INFINITY, |v| v.value);
            Ok(CandidateScore {
                indices,
                angles,
                v_ml,
            })
        })
        .collect::<Result<_>>()?;
    let winner = log
        .iter()
        .filter(|c| c.v_ml.is_finite())
        .min_by(|a, b| a.v_ml.total_cmp(&b.v_ml))
        .ok_or_else(|| Error::Numerical("every candidate subset was degenerate".into()))?;

    Ok(EstimationResult {
        angles: winner.angles.clone(),
        criterion_value: winner.v_ml,
        coefs: extended.coefs,
        iterations_used: extended.iterations,
        converged: extended.converged,
        criterion_history: extended.history,
        candidate_log: Some(log),
    })
}

/// Runs the configured estimator on a covariance estimate.
pub fn estimate(cov: &SampleCovariance, r: usize, config: &EstimatorConfig) -> Result<EstimationResult> {
    config.validate(cov.dim(), r)?;
    let decomp = subspace_decomposition(cov, r)?;
    let weight = signal_weight(&decomp)?;
    match config.method {
        Method::Mode => mode_two_step(&decomp, &weight, r, config),
        Method::Puma => puma_iterative(&decomp, &weight, r, config),
        Method::Modex | Method::EnhancedPuma => modex(cov, &decomp, &weight, r, config),
    }
}

/// Per-angle wrapped errors and their RMSE.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleErrors {
    pub errors: Vec<f64>,
    pub rmse: f64,
}

impl AngleErrors {
    pub fn max_abs(&self) -> f64 {
        self.errors.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }
}

/// Pairs both sets in ascending order; each error is the principal value of
/// `estimate - truth`.
pub fn match_angles(estimate: &AngleSet, truth: &AngleSet) -> Result<AngleErrors> {
    if estimate.len() != truth.len() {
        return Err(Error::Validation(format!(
            "cannot match {} estimated angles to {} true angles",
            estimate.len(),
            truth.len()
        )));
    }
    let errors: Vec<f64> = estimate
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(e, t)| wrap_angle(e - t))
        .collect();
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    Ok(AngleErrors { errors, rmse })
}

/// The linear map `Φ` with `vec(T(c) U) = Φ c` for degree-q coefficients:
/// `Φ[(l (m - q) + i, k)] = U[(i + k, l)]`.
pub fn coefficient_map(decomp: &SubspaceDecomposition, q: usize) -> Result<DMatrix<C64>> {
    let m = decomp.m();
    if q == 0 || q >= m {
        return Err(Error::Dimension(format!("need 0 < q < m (m={m}, q={q})")));
    }
    let rows = m - q;
    let u = &decomp.u_signal;
    Ok(DMatrix::from_fn(rows * decomp.r(), q + 1, |row, k| {
        let (l, i) = (row / rows, row % rows);
        u[(i + k, l)]
    }))
}
