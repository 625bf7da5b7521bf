//! TOML sweep and scenario files. Field names mirror the library types;
//! unknown keys are rejected.
//!
//! ```toml
//! n_trials = 500
//! base_seed = 7
//! snr_db_list = [0.0, 10.0, inf]
//! snapshots_list = [100, 400]
//! success_threshold = 0.1
//!
//! [base]
//! m = 6
//! r = 2
//! angles = [-0.4, 0.7]
//! source_cov = [[1.0, "0.5+0.1j"], ["0.5-0.1j", 1.0]]
//!
//! [[methods]]
//! method = "mode"
//!
//! [[methods]]
//! method = "modex"
//! p_extra = 2
//! ```

use std::path::Path;

use doa_core::{
    noise_power_for_snr, AngleSet, DMatrix, EstimatorConfig, Method, Scenario, C64,
};
use serde::Deserialize;

use crate::error::{BenchError, Result};
use crate::snapfile::parse_complex;

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex(String),
}

impl Entry {
    fn value(&self) -> Result<C64> {
        match self {
            Entry::Real(x) => Ok(C64::new(*x, 0.0)),
            Entry::Complex(s) => parse_complex(s.trim()).map_err(BenchError::Validation),
        }
    }
}

/// Scenario as written in a file. `noise_power` and `snr_db` are mutually
/// exclusive; a sweep ignores both, and `n_snapshots` and `seed`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub m: usize,
    pub r: Option<usize>,
    pub angles: Vec<f64>,
    /// Rows of the source covariance; identity when absent.
    pub source_cov: Option<Vec<Vec<Entry>>>,
    pub noise_power: Option<f64>,
    pub snr_db: Option<f64>,
    pub n_snapshots: Option<usize>,
    pub seed: Option<u64>,
}

impl ScenarioSpec {
    pub fn to_scenario(&self) -> Result<Scenario> {
        let r = self.angles.len();
        if let Some(declared) = self.r {
            if declared != r {
                return Err(BenchError::Validation(format!(
                    "r={declared} but {r} angles given"
                )));
            }
        }
        let angles = AngleSet::new(self.angles.clone())?;
        let source_cov = match &self.source_cov {
            None => DMatrix::identity(r, r),
            Some(rows) => {
                if rows.len() != r || rows.iter().any(|row| row.len() != r) {
                    return Err(BenchError::Validation(format!(
                        "source_cov must be {r}x{r}"
                    )));
                }
                let mut p = DMatrix::zeros(r, r);
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        p[(i, j)] = e.value()?;
                    }
                }
                p
            }
        };
        let noise_power = match (self.noise_power, self.snr_db) {
            (Some(_), Some(_)) => {
                return Err(BenchError::Validation(
                    "give either noise_power or snr_db, not both".into(),
                ))
            }
            (Some(n), None) => n,
            (None, Some(snr)) => noise_power_for_snr(&source_cov, snr),
            (None, None) => 0.0,
        };
        let scenario = Scenario {
            m: self.m,
            r,
            angles,
            source_cov,
            noise_power,
            n_snapshots: self.n_snapshots.unwrap_or(1),
            seed: self.seed.unwrap_or(0),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: String,
    pub p_extra: Option<usize>,
    pub max_iterations: Option<usize>,
    pub relative_tolerance: Option<f64>,
    pub mode_extra_reweights: Option<usize>,
    pub modex_include_base: Option<bool>,
}

impl MethodSpec {
    pub fn to_config(&self) -> Result<EstimatorConfig> {
        let mut cfg = EstimatorConfig::new(self.method.parse::<Method>()?);
        if let Some(p) = self.p_extra {
            cfg.p_extra = p;
        }
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = n;
        }
        if let Some(t) = self.relative_tolerance {
            cfg.relative_tolerance = t;
        }
        if let Some(n) = self.mode_extra_reweights {
            cfg.mode_extra_reweights = n;
        }
        if let Some(b) = self.modex_include_base {
            cfg.modex_include_base = b;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ScenarioSpec,
    pub snr_db_list: Vec<f64>,
    pub snapshots_list: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub success_threshold: Option<f64>,
}

/// A checked sweep, ready to run.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub base: Scenario,
    pub snr_db_list: Vec<f64>,
    pub snapshots_list: Vec<usize>,
    pub methods: Vec<EstimatorConfig>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub success_threshold: f64,
}

impl SweepSpec {
    pub fn resolve(&self) -> Result<Sweep> {
        let sweep = Sweep {
            base: self.base.to_scenario()?,
            snr_db_list: self.snr_db_list.clone(),
            snapshots_list: self.snapshots_list.clone(),
            methods: self
                .methods
                .iter()
                .map(MethodSpec::to_config)
                .collect::<Result<_>>()?,
            n_trials: self.n_trials,
            base_seed: self.base_seed,
            success_threshold: self.success_threshold.unwrap_or(DEFAULT_SUCCESS_THRESHOLD),
        };
        sweep.validate()?;
        Ok(sweep)
    }
}

impl Sweep {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(BenchError::Validation(msg.to_string()));
        if self.snr_db_list.is_empty() {
            return fail("snr_db_list is empty");
        }
        if self.snr_db_list.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return fail("snr_db_list entries must be real or +inf");
        }
        if self.snapshots_list.is_empty() {
            return fail("snapshots_list is empty");
        }
        if self.snapshots_list.contains(&0) {
            return fail("snapshots_list entries must be positive");
        }
        if self.methods.is_empty() {
            return fail("methods is empty");
        }
        if self.n_trials == 0 {
            return fail("n_trials must be at least 1");
        }
        if !(self.success_threshold > 0.0) {
            return fail("success_threshold must be positive");
        }
        for cfg in &self.methods {
            cfg.validate(self.base.m, self.base.r)?;
        }
        Ok(())
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_toml(&path.display().to_string(), &text)
}

fn parse_toml<T: for<'de> Deserialize<'de>>(source: &str, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((1, 1));
        BenchError::Parse {
            path: source.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

pub fn read_sweep(path: &Path) -> Result<SweepSpec> {
    read_toml(path)
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    parse_toml("<sweep>", text)
}

pub fn read_scenario(path: &Path) -> Result<ScenarioSpec> {
    read_toml(path)
}
