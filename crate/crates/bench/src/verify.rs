//! Randomized property suites behind `doa-bench verify`.

use std::f64::consts::PI;
use std::fmt;

use doa_core::{
    coefs_from_angles, kron, projector_from_annihilator, projector_from_steering,
    steering_matrix, toeplitz_annihilator, v_ml_coefs, v_mode, v_puma, vec, AngleSet, CoefVector,
    DMatrix, SampleCovariance, SignalWeight, SubspaceDecomposition, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BenchError, Result};

pub const DEFAULT_INSTANCES: usize = 1000;
pub const MAX_M: usize = 16;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Explicit (m, r) sizes, cycled over the instances. Random sizes with
    /// m in [3, 12] and r in [1, 4] when empty.
    pub sizes: Vec<(usize, usize)>,
    pub n_instances: usize,
    pub seed: u64,
    /// Scale the signal weights in the PUMA path by `1 + 1e-6`.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            sizes: Vec::new(),
            n_instances: DEFAULT_INSTANCES,
            seed: 0,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Absolute,
    Relative,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub scale: Scale,
    pub tolerance: f64,
    pub cases: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub errors: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str, scale: Scale, tolerance: f64) -> Self {
        Self {
            name,
            scale,
            tolerance,
            cases: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            errors: Vec::new(),
        }
    }

    /// Records a deviation `|a - b|` with reference magnitude `reference`;
    /// the relative figure divides by `max(1, reference)`.
    fn record(&mut self, deviation: f64, reference: f64) {
        self.cases += 1;
        self.max_abs = self.max_abs.max(deviation);
        self.max_rel = self.max_rel.max(deviation / reference.abs().max(1.0));
        if deviation.is_nan() {
            self.max_abs = f64::NAN;
        }
    }

    fn record_result(&mut self, r: doa_core::Result<(f64, f64)>) {
        match r {
            Ok((dev, reference)) => self.record(dev, reference),
            Err(e) => {
                self.cases += 1;
                self.errors.push(e.to_string());
            }
        }
    }

    pub fn measured(&self) -> f64 {
        match self.scale {
            Scale::Absolute => self.max_abs,
            Scale::Relative => self.max_rel,
        }
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.measured() <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.suites.is_empty() {
            return writeln!(f, "no instances");
        }
        writeln!(
            f,
            "{:<14} {:>6} {:>12} {:>12} {:>10} {:>5}",
            "property", "cases", "max_abs", "max_rel", "tolerance", "ok"
        )?;
        for s in &self.suites {
            let tol = match s.scale {
                Scale::Absolute => format!("abs {:.0e}", s.tolerance),
                Scale::Relative => format!("rel {:.0e}", s.tolerance),
            };
            writeln!(
                f,
                "{:<14} {:>6} {:>12.3e} {:>12.3e} {:>10} {:>5}",
                s.name,
                s.cases,
                s.max_abs,
                s.max_rel,
                tol,
                if s.passed() { "yes" } else { "NO" }
            )?;
            for e in s.errors.iter().take(3) {
                writeln!(f, "  error: {e}")?;
            }
        }
        Ok(())
    }
}

fn cn(rng: &mut impl Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

fn random_coefs(rng: &mut impl Rng, q: usize) -> CoefVector {
    let mut v: Vec<C64> = (0..=q).map(|_| cn(rng)).collect();
    if v[0].norm() < 0.1 {
        v[0] = C64::new(1.0, 0.0);
    }
    CoefVector::new(v).expect("nonzero leading coefficient")
}

fn random_nonzero(rng: &mut impl Rng) -> C64 {
    loop {
        let z = cn(rng) * 2.0;
        if z.norm() > 1e-2 {
            return z;
        }
    }
}

fn random_subspace(rng: &mut impl Rng, m: usize, r: usize) -> (SubspaceDecomposition, SignalWeight) {
    let decomp = SubspaceDecomposition {
        u_signal: random_matrix(rng, m, r).qr().q(),
        lambdas: vec![1.0; r],
        sigma2: 0.0,
        all_eigenvalues: vec![1.0; m],
    };
    let g = (0..r).map(|_| rng.random_range(0.05..5.0)).collect();
    (decomp, SignalWeight::new(g).expect("positive weights"))
}

/// Angles in (-π, π] with circular separation at least `min_sep`.
fn random_angles(rng: &mut impl Rng, r: usize, min_sep: f64) -> AngleSet {
    loop {
        let mut v: Vec<f64> = (0..r).map(|_| rng.random_range(-PI + 1e-9..PI)).collect();
        v.sort_by(f64::total_cmp);
        let ok = v.windows(2).all(|w| w[1] - w[0] >= min_sep)
            && (r < 2 || v[0] + 2.0 * PI - v[r - 1] >= min_sep);
        if ok {
            return AngleSet::new(v).expect("sorted distinct angles");
        }
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_sizes(sizes: &[(usize, usize)]) -> Result<()> {
    for &(m, r) in sizes {
        if m > MAX_M || r == 0 || r >= m {
            return Err(BenchError::Validation(format!(
                "size {m}x{r} outside 1 <= r < m <= {MAX_M}"
            )));
        }
    }
    Ok(())
}

pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    check_sizes(&opts.sizes)?;
    if opts.n_instances == 0 {
        return Ok(VerifyReport::default());
    }
    let mut equivalence = SuiteReport::new("equivalence", Scale::Relative, 1e-10);
    let mut projector = SuiteReport::new("projector", Scale::Absolute, 1e-10);
    let mut annihilation = SuiteReport::new("annihilation", Scale::Absolute, 1e-12);
    let mut gauge = SuiteReport::new("gauge", Scale::Relative, 1e-10);
    let mut vec_lemma = SuiteReport::new("vec_lemma", Scale::Absolute, 1e-12);
    let mut trace_lemma = SuiteReport::new("trace_lemma", Scale::Absolute, 1e-12);
    let mut identity = SuiteReport::new("identity_trace", Scale::Absolute, 1e-12);

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    for i in 0..opts.n_instances {
        let (m, r) = match opts.sizes.get(i % opts.sizes.len().max(1)) {
            Some(&size) => size,
            None => {
                let m = rng.random_range(3..=12);
                (m, rng.random_range(1..=4.min(m - 1)))
            }
        };

        // V_PUMA from the explicit Kronecker weight against the trace form
        let (decomp, weight) = random_subspace(&mut rng, m, r);
        let c = random_coefs(&mut rng, r);
        let puma_weight = if opts.inject_fault {
            SignalWeight::new(weight.as_slice().iter().map(|g| g * (1.0 + 1e-6)).collect())?
        } else {
            weight.clone()
        };
        equivalence.record_result((|| {
            let mode = v_mode(&c, &decomp, &weight)?.value;
            let puma = v_puma(&c, &decomp, &puma_weight)?.value;
            Ok(((puma - mode).abs(), mode))
        })());

        // projector identity and annihilation on a Vandermonde model
        let mp = m.min(10);
        let rp = r.min(mp - 1);
        let angles = random_angles(&mut rng, rp, 0.05);
        let coefs = coefs_from_angles(&angles);
        projector.record_result((|| {
            let a = steering_matrix(&angles, mp)?;
            let t = toeplitz_annihilator(&coefs, mp)?;
            annihilation.record(max_abs(&(&t * &a)), 1.0);
            let diff = projector_from_steering(&a)? - projector_from_annihilator(&t)?;
            Ok((diff.norm(), 1.0))
        })());

        // gauge invariance of all three criteria
        let alpha = random_nonzero(&mut rng);
        let b = random_matrix(&mut rng, m, m);
        let cov = SampleCovariance::from_matrix(&b * b.adjoint())?;
        let scaled = c.scaled(alpha)?;
        for (f, fs) in [
            (v_ml_coefs(&c, &cov), v_ml_coefs(&scaled, &cov)),
            (v_mode(&c, &decomp, &weight), v_mode(&scaled, &decomp, &weight)),
            (v_puma(&c, &decomp, &weight), v_puma(&scaled, &decomp, &weight)),
        ] {
            gauge.record_result(f.and_then(|a| fs.map(|b| ((a.value - b.value).abs(), a.value))));
        }

        // vec(XYZ) = (Zᵀ ⊗ X) vec(Y) and tr(X*Y) = vec(X)* vec(Y)
        let (p, q, s, t) = (
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let x = random_matrix(&mut rng, p, q);
        let y = random_matrix(&mut rng, q, s);
        let z = random_matrix(&mut rng, s, t);
        let lhs = vec(&(&x * &y * &z));
        let rhs = kron(&z.transpose(), &x) * vec(&y);
        vec_lemma.record((lhs - rhs).iter().fold(0.0, |a, z| a.max(z.norm())), 1.0);
        let x = random_matrix(&mut rng, p, q);
        let y = random_matrix(&mut rng, p, q);
        let tr = (x.adjoint() * &y).trace();
        trace_lemma.record((tr - vec(&x).dotc(&vec(&y))).norm(), 1.0);

        // tr{Π_T} = m - q
        let q = rng.random_range(1..m);
        let c = random_coefs(&mut rng, q);
        let eye = SampleCovariance::from_matrix(DMatrix::identity(m, m))?;
        identity.record_result(v_ml_coefs(&c, &eye).map(|v| ((v.value - (m - q) as f64).abs(), 1.0)));
    }
    Ok(VerifyReport {
        suites: vec![equivalence, projector, annihilation, gauge, vec_lemma, trace_lemma, identity],
    })
}
