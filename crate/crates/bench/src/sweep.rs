//! Monte Carlo sweeps over SNR and snapshot count.

use std::io::Write;
use std::time::Instant;

use doa_core::{
    estimate, match_angles, noise_power_for_snr, sample_covariance, simulate_snapshots,
    EstimatorConfig, Scenario,
};
use rayon::prelude::*;

use crate::config::Sweep;
use crate::error::{BenchError, Result};

pub const CSV_COLUMNS: [&str; 11] = [
    "method",
    "m",
    "r",
    "snr_db",
    "n_snapshots",
    "trial_index",
    "rmse_rad",
    "criterion_value",
    "converged",
    "success",
    "wall_time_ms",
];

/// One CSV row. Aggregate rows have `trial_index = -1`, carry the cell RMSE
/// in `rmse_rad`, the mean criterion in `criterion_value`, and the converged
/// and success fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: &'static str,
    pub m: usize,
    pub r: usize,
    pub snr_db: f64,
    pub n_snapshots: usize,
    pub trial_index: i64,
    /// NaN when the estimator failed.
    pub rmse_rad: f64,
    pub criterion_value: f64,
    pub converged: f64,
    pub success: f64,
    pub wall_time_ms: Option<f64>,
}

impl TrialRecord {
    pub fn is_aggregate(&self) -> bool {
        self.trial_index < 0
    }

    fn fields(&self) -> [String; 11] {
        let flag = |x: f64| {
            if self.is_aggregate() {
                x.to_string()
            } else if x > 0.0 {
                "1".into()
            } else {
                "0".into()
            }
        };
        [
            self.method.to_string(),
            self.m.to_string(),
            self.r.to_string(),
            self.snr_db.to_string(),
            self.n_snapshots.to_string(),
            self.trial_index.to_string(),
            self.rmse_rad.to_string(),
            self.criterion_value.to_string(),
            flag(self.converged),
            flag(self.success),
            self.wall_time_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub jobs: usize,
    /// Fill `wall_time_ms`. Off by default so that output is byte-identical
    /// across runs.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, timing: false }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one trial. All methods in a cell see the same data.
pub fn trial_seed(base_seed: u64, snr_index: usize, snapshots_index: usize, trial: usize) -> u64 {
    [snr_index, snapshots_index, trial]
        .iter()
        .fold(splitmix64(base_seed), |h, &k| splitmix64(h ^ k as u64))
}

struct Outcome {
    rmse: f64,
    criterion: f64,
    converged: bool,
    success: bool,
    millis: f64,
}

fn run_trial(scenario: &Scenario, methods: &[EstimatorConfig], threshold: f64) -> Vec<Outcome> {
    let cov = simulate_snapshots(scenario).and_then(|s| sample_covariance(&s));
    methods
        .iter()
        .map(|cfg| {
            let start = Instant::now();
            let result = cov.as_ref().map_err(Clone::clone).and_then(|cov| {
                let res = estimate(cov, scenario.r, cfg)?;
                let err = match_angles(&res.angles, &scenario.angles)?;
                Ok((res, err))
            });
            let millis = start.elapsed().as_secs_f64() * 1e3;
            match result {
                Ok((res, err)) => Outcome {
                    rmse: err.rmse,
                    criterion: res.criterion_value,
                    converged: res.converged,
                    success: err.max_abs() <= threshold,
                    millis,
                },
                Err(_) => Outcome {
                    rmse: f64::NAN,
                    criterion: f64::NAN,
                    converged: false,
                    success: false,
                    millis,
                },
            }
        })
        .collect()
}

/// Summary row computed from the trial rows of one cell.
pub fn aggregate(rows: &[TrialRecord]) -> TrialRecord {
    let first = &rows[0];
    let n = rows.len() as f64;
    let finite: Vec<&TrialRecord> = rows.iter().filter(|r| r.rmse_rad.is_finite()).collect();
    let nf = finite.len() as f64;
    TrialRecord {
        trial_index: -1,
        rmse_rad: (finite.iter().map(|r| r.rmse_rad * r.rmse_rad).sum::<f64>() / nf).sqrt(),
        criterion_value: finite.iter().map(|r| r.criterion_value).sum::<f64>() / nf,
        converged: rows.iter().map(|r| r.converged).sum::<f64>() / n,
        success: rows.iter().map(|r| r.success).sum::<f64>() / n,
        wall_time_ms: first
            .wall_time_ms
            .map(|_| rows.iter().filter_map(|r| r.wall_time_ms).sum::<f64>()),
        ..first.clone()
    }
}

/// Runs every trial and returns rows ordered by SNR, snapshot count, method
/// and trial index, each cell followed by its aggregate row.
pub fn run(sweep: &Sweep, opts: RunOptions) -> Result<Vec<TrialRecord>> {
    sweep.validate()?;
    let work: Vec<(usize, usize, usize)> = (0..sweep.snr_db_list.len())
        .flat_map(|s| {
            (0..sweep.snapshots_list.len())
                .flat_map(move |t| (0..sweep.n_trials).map(move |k| (s, t, k)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Validation(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Vec<Outcome>> = pool.install(|| {
        work.par_iter()
            .map(|&(s, t, k)| {
                let scenario = Scenario {
                    noise_power: noise_power_for_snr(&sweep.base.source_cov, sweep.snr_db_list[s]),
                    n_snapshots: sweep.snapshots_list[t],
                    seed: trial_seed(sweep.base_seed, s, t, k),
                    ..sweep.base.clone()
                };
                run_trial(&scenario, &sweep.methods, sweep.success_threshold)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(work.len() * sweep.methods.len() + 16);
    for (cell, chunk) in outcomes.chunks(sweep.n_trials).enumerate() {
        let s = cell / sweep.snapshots_list.len();
        let t = cell % sweep.snapshots_list.len();
        for (mi, cfg) in sweep.methods.iter().enumerate() {
            let start = rows.len();
            for (k, trial) in chunk.iter().enumerate() {
                let o = &trial[mi];
                rows.push(TrialRecord {
                    method: cfg.method.name(),
                    m: sweep.base.m,
                    r: sweep.base.r,
                    snr_db: sweep.snr_db_list[s],
                    n_snapshots: sweep.snapshots_list[t],
                    trial_index: k as i64,
                    rmse_rad: o.rmse,
                    criterion_value: o.criterion,
                    converged: f64::from(u8::from(o.converged)),
                    success: f64::from(u8::from(o.success)),
                    wall_time_ms: opts.timing.then_some(o.millis),
                });
            }
            let summary = aggregate(&rows[start..]);
            rows.push(summary);
        }
    }
    Ok(rows)
}

/// Writes `#` metadata lines followed by the CSV table.
pub fn write_csv<W: Write>(out: W, sweep: &Sweep, rows: &[TrialRecord]) -> std::io::Result<()> {
    let mut out = out;
    let methods: Vec<String> = sweep
        .methods
        .iter()
        .map(|c| format!("{}(p_extra={})", c.method.name(), c.p_extra))
        .collect();
    writeln!(out, "# doa-bench mc")?;
    writeln!(out, "# snr_db = 10*log10(tr(P) / (r * noise_power)): average per-source power over noise power")?;
    writeln!(
        out,
        "# m={} r={} angles={:?} base_seed={} n_trials={} success_threshold={} methods={}",
        sweep.base.m,
        sweep.base.r,
        sweep.base.angles.as_slice(),
        sweep.base_seed,
        sweep.n_trials,
        sweep.success_threshold,
        methods.join(",")
    )?;
    writeln!(out, "# trial_index=-1 rows: rmse_rad = sqrt(mean rmse^2) over finite trials, criterion_value = mean, converged and success = fractions")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()
}
