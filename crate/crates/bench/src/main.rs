use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doa_bench::config::{read_scenario, read_sweep, ScenarioSpec};
use doa_bench::verify::{self, VerifyOptions};
use doa_bench::{snapfile, sweep, BenchError, Result};
use doa_core::{estimate, sample_covariance, simulate_snapshots, EstimatorConfig, Method};

/// Direction-of-arrival estimation on uniform linear arrays: property
/// checks, Monte Carlo sweeps and single-file estimation.
#[derive(Parser)]
#[command(name = "doa-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized criterion and projector property suites.
    Verify(VerifyArgs),
    /// Run a Monte Carlo sweep and write per-trial CSV rows.
    Mc(McArgs),
    /// Estimate angles from a snapshot file.
    Estimate(EstimateArgs),
    /// Write a snapshot file simulated from a scenario file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random instances.
    #[arg(long, visible_alias = "trials", default_value_t = verify::DEFAULT_INSTANCES)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated sizes such as `6x2,8x3`; random when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    sizes: Vec<(usize, usize)>,
    /// Perturb the signal weights in the PUMA path by 1e-6 (detector self-test).
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct MethodArgs {
    /// mode, puma, modex or epuma.
    #[arg(long)]
    method: Option<Method>,
    /// Extra polynomial coefficients for modex/epuma (default 2 there, 0 otherwise).
    #[arg(long)]
    p_extra: Option<usize>,
}

impl MethodArgs {
    fn config(&self, method: Method) -> EstimatorConfig {
        let default_p = if method.uses_extra_coefficients() { 2 } else { 0 };
        EstimatorConfig::new(method).with_p_extra(self.p_extra.unwrap_or(default_p))
    }
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `n_trials`.
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    method: MethodArgs,
    /// Overrides `success_threshold` (radians).
    #[arg(long)]
    success_threshold: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Fill the wall_time_ms column (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// Snapshot file (`# m=<m> T=<T>` header, one snapshot per line).
    input: PathBuf,
    /// Number of sources.
    #[arg(short = 'r', long)]
    sources: usize,
    /// Expected sensor count; checked against the file header.
    #[arg(short = 'm', long)]
    sensors: Option<usize>,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML (m, r, angles, source_cov, noise_power or snr_db, n_snapshots, seed).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, r) = s.split_once('x').ok_or_else(|| format!("size `{s}` is not <m>x<r>"))?;
    match (m.trim().parse(), r.trim().parse()) {
        (Ok(m), Ok(r)) => Ok((m, r)),
        _ => Err(format!("size `{s}` is not <m>x<r>")),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let report = verify::run(&VerifyOptions {
        sizes: args.sizes.clone(),
        n_instances: args.instances,
        seed: args.seed,
        inject_fault: args.inject_fault,
    })?;
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(BenchError::Numerical("property deviation above tolerance".into()))
    }
}

fn cmd_mc(args: &McArgs) -> Result<()> {
    let mut spec = read_sweep(&args.config)?.resolve()?;
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if let Some(n) = args.trials {
        spec.n_trials = n;
    }
    if let Some(method) = args.method.method {
        spec.methods = vec![args.method.config(method)];
    } else if let Some(p) = args.method.p_extra {
        for cfg in spec.methods.iter_mut().filter(|c| c.method.uses_extra_coefficients()) {
            cfg.p_extra = p;
        }
    }
    if let Some(t) = args.success_threshold {
        spec.success_threshold = t;
    }
    if args.jobs == 0 {
        return Err(BenchError::Validation("--jobs must be at least 1".into()));
    }
    let rows = sweep::run(
        &spec,
        sweep::RunOptions {
            jobs: args.jobs,
            timing: args.timing,
        },
    )?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
            let mut w = BufWriter::new(file);
            sweep::write_csv(&mut w, &spec, &rows)
                .and_then(|_| w.flush())
                .map_err(|e| BenchError::io(path, e))
        }
        None => sweep::write_csv(std::io::stdout().lock(), &spec, &rows)
            .map_err(|e| BenchError::io("<stdout>", e)),
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let set = snapfile::read(&args.input)?;
    if let Some(m) = args.sensors {
        if m != set.m() {
            return Err(BenchError::Validation(format!(
                "--sensors {m} but the file holds {} sensors",
                set.m()
            )));
        }
    }
    let cfg = args.method.config(args.method.method.unwrap_or(Method::Mode));
    cfg.validate(set.m(), args.sources)?;
    let cov = sample_covariance(&set)?;
    let res = estimate(&cov, args.sources, &cfg)?;
    let angles: Vec<String> = res.angles.as_slice().iter().map(|a| a.to_string()).collect();
    println!("method {}", cfg.method.name());
    println!("angles_rad {}", angles.join(" "));
    println!("criterion {:e}", res.criterion_value);
    println!("iterations {}", res.iterations_used);
    println!("converged {}", res.converged);
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec: ScenarioSpec = read_scenario(&args.config)?;
    let mut scenario = spec.to_scenario()?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let set = simulate_snapshots(&scenario)?;
    snapfile::write(&args.out, &set.snapshots)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("doa-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
