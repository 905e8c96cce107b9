use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::compare::compare;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, worker_pool};
use crate::output::{ensure_dir, fmt_f64, write_reports};
use crate::spec::{parse_seeds, Algorithm, ExperimentSpec, ModeSpec};
use crate::sweep::{sweep_n, write_sweep, SweepOptions};
use crate::verify::{verify_suite, Level, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "page-opt", version, about = "PAGE optimizer experiments, verifier suite and sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm over a list of seeds and write traces and a summary
    Run(ExperimentArgs),
    /// Run every verifier check; exit 1 if any fails
    Verify(VerifyArgs),
    /// Measure gradient complexity against n
    SweepN(SweepArgs),
    /// PAGE, SGD and GD under one oracle budget
    Compare(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment manifest; flags below override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds as `0..50`, `1,2,3` or a single integer
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long = "b-prime")]
    pub b_prime: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeSpec>,
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Diagnostics every k iterations (0: only at the returned iterate)
    #[arg(long = "diag-interval")]
    pub diag_interval: Option<usize>,
}

impl ExperimentArgs {
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(s) = &self.seeds {
            spec.seeds = parse_seeds(s).map_err(HarnessError::Invalid)?;
        }
        if let Some(e) = self.epsilon {
            spec.epsilon = e;
        }
        spec.eta = self.eta.or(spec.eta);
        spec.p = self.p.or(spec.p);
        spec.b = self.b.or(spec.b);
        spec.b_prime = self.b_prime.or(spec.b_prime);
        spec.iters = self.iters.or(spec.iters);
        if let Some(m) = self.mode {
            spec.mode = m;
        }
        if let Some(a) = self.algorithm {
            spec.algorithm = a;
        }
        if let Some(o) = &self.out {
            spec.output_dir = o.clone();
        }
        if let Some(k) = self.diag_interval {
            spec.diagnostics_interval = k;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: Level,
    #[arg(long, default_value = "page-verify")]
    pub out: PathBuf,
    /// Multiply every certified L by this factor before checking
    #[arg(long = "l-scale", default_value_t = 1.0)]
    pub l_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Ascending component counts, comma separated
    #[arg(long = "n-values", value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
    pub n_values: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value = "0..10")]
    pub seeds: String,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta0: f64,
    #[arg(long, default_value = "page-sweep")]
    pub out: PathBuf,
}

fn cmd_run(args: &ExperimentArgs) -> Result<()> {
    let spec = args.to_spec()?;
    let outcome = run_experiment(&spec)?;
    let norms: Vec<f64> = outcome.rows.iter().map(|r| r.final_grad_norm).collect();
    let r = &outcome.resolved;
    println!(
        "{}: b={} b'={} p={} eta={} T={} over {} seeds",
        r.algorithm,
        r.b,
        r.b_prime,
        fmt_f64(r.p),
        fmt_f64(r.eta),
        r.iters,
        norms.len()
    );
    println!("mean final grad norm {}", fmt_f64(norms.iter().sum::<f64>() / norms.len() as f64));
    println!("summary: {}", outcome.summary_path.display());
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let pool = worker_pool()?;
    let opts = VerifyOptions { level: args.level, l_scale: args.l_scale, seed: args.seed };
    let reports = verify_suite(&pool, &opts)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("verify_report.csv");
    write_reports(&path, &reports)?;
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {} margin={} tol={}", r.name, fmt_f64(r.margin), fmt_f64(r.tolerance));
    }
    println!("report: {}", path.display());
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::ChecksFailed(failed))
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let pool = worker_pool()?;
    let opts = SweepOptions {
        n_values: args.n_values.clone(),
        epsilon: args.epsilon,
        seeds: parse_seeds(&args.seeds).map_err(HarnessError::Invalid)?,
        dim: args.dim,
        delta0: args.delta0,
        problem_seed: 0,
        output_dir: args.out.clone(),
    };
    let outcome = sweep_n(&pool, &opts)?;
    write_sweep(&args.out, &outcome)?;
    for r in &outcome.rows {
        println!(
            "n={} b'={} T={} mean_cost={} se={} theory={}",
            r.n,
            r.b_prime,
            r.iters,
            fmt_f64(r.mean_cost),
            fmt_f64(r.se_cost),
            fmt_f64(r.theory_cost)
        );
    }
    match outcome.slope {
        Some(s) => println!("log-log slope {}", fmt_f64(s)),
        None => println!("log-log slope undefined"),
    }
    Ok(())
}

fn cmd_compare(args: &ExperimentArgs) -> Result<()> {
    let spec = args.to_spec()?;
    let pool = worker_pool()?;
    let outcome = compare(&pool, &spec)?;
    for r in &outcome.rows {
        println!(
            "{:>4}: T={} paper_calls={} grad_norm={} ± {}",
            r.algorithm,
            r.iters,
            fmt_f64(r.mean_paper_calls),
            fmt_f64(r.mean_final_grad_norm),
            fmt_f64(r.se_final_grad_norm)
        );
    }
    println!("table: {}", outcome.output_dir.join("compare.csv").display());
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::SweepN(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("page-opt: {e}");
            e.exit_code()
        }
    }
}
