//! Snapshot simulation, sample covariance and signal-subspace statistics.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array_model::{steering_matrix, AngleSet};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen_desc, hermitian_part, real};
use crate::C64;

/// Relative eigenvalue floor used when checking positive semidefiniteness.
const PSD_FLOOR: f64 = 1e-10;

/// A simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub m: usize,
    pub r: usize,
    pub angles: AngleSet,
    /// r x r Hermitian PSD source covariance.
    pub source_cov: DMatrix<C64>,
    pub noise_power: f64,
    pub n_snapshots: usize,
    pub seed: u64,
}

impl Scenario {
    /// Uncorrelated sources of equal power.
    pub fn uncorrelated(
        m: usize,
        angles: AngleSet,
        source_power: f64,
        noise_power: f64,
        n_snapshots: usize,
        seed: u64,
    ) -> Self {
        let r = angles.len();
        Self {
            m,
            r,
            angles,
            source_cov: DMatrix::from_diagonal_element(r, r, real(source_power)),
            noise_power,
            n_snapshots,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r >= self.m {
            return Err(Error::Dimension(format!(
                "scenario needs 0 < r < m (m={}, r={})",
                self.m, self.r
            )));
        }
        if self.angles.len() != self.r {
            return Err(Error::Dimension(format!(
                "scenario has r={} but {} angles",
                self.r,
                self.angles.len()
            )));
        }
        if self.source_cov.shape() != (self.r, self.r) {
            return Err(Error::Dimension(format!(
                "source covariance must be {0}x{0}, got {1}x{2}",
                self.r,
                self.source_cov.nrows(),
                self.source_cov.ncols()
            )));
        }
        if !(self.noise_power >= 0.0) || !self.noise_power.is_finite() {
            return Err(Error::Validation(format!(
                "noise power must be finite and nonnegative, got {}",
                self.noise_power
            )));
        }
        if self.n_snapshots == 0 {
            return Err(Error::Validation("snapshot count must be positive".into()));
        }
        hermitian_sqrt_psd(&self.source_cov).map(|_| ())
    }

    /// Per-source average power over noise power, in dB.
    pub fn snr_db(&self) -> f64 {
        let total: f64 = (0..self.r).map(|i| self.source_cov[(i, i)].re).sum();
        10.0 * (total / (self.r as f64 * self.noise_power)).log10()
    }
}

/// `tr(P) / (r · 10^{snr/10})`: the noise power giving the requested
/// per-source SNR. Infinite SNR maps to zero noise.
pub fn noise_power_for_snr(source_cov: &DMatrix<C64>, snr_db: f64) -> f64 {
    let r = source_cov.nrows().max(1) as f64;
    let total: f64 = (0..source_cov.nrows()).map(|i| source_cov[(i, i)].re).sum();
    total / (r * 10f64.powf(snr_db / 10.0))
}

/// Principal square root of a Hermitian PSD matrix; rejects matrices with an
/// eigenvalue below `-1e-10 · λ_max`.
fn hermitian_sqrt_psd(p: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if (p - p.adjoint()).norm() > 1e-12 * p.norm().max(1.0) {
        return Err(Error::Validation("source covariance is not Hermitian".into()));
    }
    let (values, vectors) = hermitian_eigen_desc(p)?;
    let max = values.first().copied().unwrap_or(0.0).max(0.0);
    if values.iter().any(|&v| v < -PSD_FLOOR * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::Validation(
            "source covariance is not positive semidefinite".into(),
        ));
    }
    let roots = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v.max(0.0).sqrt())),
    ));
    Ok(&vectors * roots * vectors.adjoint())
}

/// Covariance estimate. `n_snapshots` is `None` for an exact (model) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    pub matrix: DMatrix<C64>,
    pub n_snapshots: Option<usize>,
}

impl SampleCovariance {
    /// Wraps an arbitrary Hermitian matrix, symmetrizing it.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("covariance must be square".into()));
        }
        Ok(Self {
            matrix: hermitian_part(&matrix),
            n_snapshots: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Snapshot matrix, one column per time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub snapshots: DMatrix<C64>,
    pub scenario: Option<Scenario>,
}

impl SnapshotSet {
    pub fn from_matrix(snapshots: DMatrix<C64>) -> Self {
        Self {
            snapshots,
            scenario: None,
        }
    }

    pub fn m(&self) -> usize {
        self.snapshots.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.snapshots.ncols()
    }
}

/// `A P A* + σ² I`.
pub fn true_covariance(scenario: &Scenario) -> Result<SampleCovariance> {
    scenario.validate()?;
    let a = steering_matrix(&scenario.angles, scenario.m)?;
    let noise = DMatrix::from_diagonal_element(scenario.m, scenario.m, real(scenario.noise_power));
    let matrix = &a * &scenario.source_cov * a.adjoint() + noise;
    Ok(SampleCovariance {
        matrix: hermitian_part(&matrix),
        n_snapshots: None,
    })
}

/// Draws `y(t) = A s(t) + n(t)` with circular complex Gaussian source and
/// noise vectors. Snapshot `t` uses ChaCha stream `t` of the scenario seed,
/// so each column is reproducible on its own.
pub fn simulate_snapshots(scenario: &Scenario) -> Result<SnapshotSet> {
    scenario.validate()?;
    let (m, r, n) = (scenario.m, scenario.r, scenario.n_snapshots);
    let a = steering_matrix(&scenario.angles, m)?;
    let coloring = &a * hermitian_sqrt_psd(&scenario.source_cov)?;
    let noise_std = scenario.noise_power.sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;

    let mut snapshots = DMatrix::<C64>::zeros(m, n);
    let mut white = vec![C64::new(0.0, 0.0); r + m];
    for t in 0..n {
        let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
        rng.set_stream(t as u64);
        for w in white.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *w = C64::new(re * half, im * half);
        }
        for i in 0..m {
            let signal: C64 = (0..r).map(|k| coloring[(i, k)] * white[k]).sum();
            snapshots[(i, t)] = signal + white[r + i] * noise_std;
        }
    }
    Ok(SnapshotSet {
        snapshots,
        scenario: Some(scenario.clone()),
    })
}

/// `(1/T) Σ_t y(t) y(t)*`, symmetrized.
pub fn sample_covariance(set: &SnapshotSet) -> Result<SampleCovariance> {
    let y = &set.snapshots;
    let n = y.ncols();
    if n == 0 {
        return Err(Error::Validation("sample covariance needs at least one snapshot".into()));
    }
    if y.nrows() == 0 {
        return Err(Error::Validation("snapshots have no sensors".into()));
    }
    let raw = (y * y.adjoint()).unscale(n as f64);
    Ok(SampleCovariance {
        matrix: hermitian_part(&raw),
        n_snapshots: Some(n),
    })
}

/// Principal eigenvectors, their eigenvalues and the noise power estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition {
    /// m x r orthonormal columns, one per principal eigenvalue.
    pub u_signal: DMatrix<C64>,
    /// The r largest eigenvalues, descending.
    pub lambdas: Vec<f64>,
    /// Mean of the m - r smallest eigenvalues, floored at 0.
    pub sigma2: f64,
    /// All m eigenvalues, descending.
    pub all_eigenvalues: Vec<f64>,
}

impl SubspaceDecomposition {
    pub fn m(&self) -> usize {
        self.u_signal.nrows()
    }

    pub fn r(&self) -> usize {
        self.u_signal.ncols()
    }

    /// False when the smallest signal eigenvalue does not exceed the noise
    /// estimate (the weight for that direction then vanishes).
    pub fn is_well_posed(&self) -> bool {
        self.lambdas.last().is_some_and(|&l| l > self.sigma2)
    }
}

/// Splits `cov` into an r-dimensional signal subspace and a noise level.
///
/// Each eigenvector's phase is fixed so that its largest-magnitude entry is
/// real and positive.
pub fn subspace_decomposition(cov: &SampleCovariance, r: usize) -> Result<SubspaceDecomposition> {
    let m = cov.dim();
    if r == 0 || r >= m {
        return Err(Error::Dimension(format!(
            "subspace split needs 0 < r < m (m={m}, r={r})"
        )));
    }
    let (values, vectors) = hermitian_eigen_desc(&cov.matrix)?;
    let mut u_signal = vectors.columns(0, r).into_owned();
    for mut col in u_signal.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| {
                if z.norm() > best.1 {
                    (i, z.norm())
                } else {
                    best
                }
            })
            .0;
        let z = col[pivot];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            col.iter_mut().for_each(|x| *x *= phase);
            col[pivot] = real(col[pivot].norm());
        }
    }
    let sigma2 = (values[r..].iter().sum::<f64>() / (m - r) as f64).max(0.0);
    Ok(SubspaceDecomposition {
        u_signal,
        lambdas: values[..r].to_vec(),
        sigma2,
        all_eigenvalues: values,
    })
}

/// MODE weights `g_i = (λ_i - σ²)² / λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalWeight(Vec<f64>);

impl SignalWeight {
    /// Arbitrary nonnegative weights (used by tests and the verifier).
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        Ok(Self(g))
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
}

pub fn signal_weight(decomp: &SubspaceDecomposition) -> Result<SignalWeight> {
    let g = decomp
        .lambdas
        .iter()
        .map(|&l| {
            if l > 0.0 {
                Ok((l - decomp.sigma2).powi(2) / l)
            } else {
                Err(Error::Validation(format!(
                    "signal eigenvalue {l:e} is not positive"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignalWeight(g))
}
