//! Resolving a spec into concrete run parameters and executing its seeds.

use std::path::{Path, PathBuf};

use page_core::estimator::EstimatorParams;
use page_core::theory::{
    default_probability, default_small_batch, grad_complexity, online_minibatch, stepsize_max, theory_inputs,
    TheoryInputs,
};
use page_core::{run_page, FiniteSumProblem, Mode, PageConfig, RunResult, Vector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, write_summary, write_trace, SummaryRow};
use crate::spec::{build_instance, Algorithm, ExperimentSpec};

pub const THREADS_ENV: &str = "PAGE_OPT_THREADS";

/// Worker pool bounded by `PAGE_OPT_THREADS` (all cores when unset).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|t| *t >= 1)
            .ok_or_else(|| HarnessError::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::invalid(format!("thread pool: {e}")))
}

/// Concrete parameters for one algorithm on one problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub algorithm: &'static str,
    pub b: usize,
    pub b_prime: usize,
    pub p: f64,
    pub eta: f64,
    pub iters: usize,
    pub epsilon: f64,
    pub theory_iters: Option<u64>,
    pub theory_grad_complexity: Option<f64>,
    #[serde(skip)]
    pub x0: Vector,
    pub diagnostics_interval: usize,
}

impl Resolved {
    pub fn config(&self, seed: u64) -> Result<PageConfig> {
        let params = EstimatorParams::new(self.b, self.b_prime, self.p)
            .map_err(|e| HarnessError::invalid(format!("estimator parameters: {e}")))?;
        Ok(PageConfig::new(self.eta, params, self.iters, self.x0.clone())
            .with_epsilon(self.epsilon)
            .with_seed(seed)
            .with_diagnostics(self.diagnostics_interval))
    }
}

fn big_batch<P: FiniteSumProblem + ?Sized>(problem: &P, mode: Mode, epsilon: f64) -> Result<usize> {
    match mode {
        Mode::Finite => problem
            .components()
            .finite()
            .ok_or_else(|| HarnessError::invalid("finite mode needs a finite problem")),
        Mode::Online => {
            let sigma_sq = problem
                .constants()
                .sigma_sq
                .ok_or_else(|| HarnessError::invalid("online mode needs a certified variance"))?;
            Ok(online_minibatch(sigma_sq, epsilon, problem.components()))
        }
    }
}

/// Fills every parameter the spec leaves open from the theory. Overrides of
/// `b`, `b′` or `p` propagate into the derived `η` and `T`.
pub fn resolve<P: FiniteSumProblem + ?Sized>(problem: &P, x0: &Vector, spec: &ExperimentSpec) -> Result<Resolved> {
    spec.validate()?;
    let mode: Mode = spec.mode.into();
    let l = problem.constants().smoothness;
    let inputs: Option<TheoryInputs> = theory_inputs(problem, x0, spec.epsilon).ok();
    let n = problem.components().finite();
    let (b, b_prime, p) = match spec.algorithm {
        Algorithm::Page => {
            let b = match spec.b {
                Some(b) => b,
                None => big_batch(problem, mode, spec.epsilon)?,
            };
            let b_prime = spec.b_prime.unwrap_or_else(|| default_small_batch(b));
            let p = spec.p.unwrap_or_else(|| default_probability(b, b_prime));
            (b, b_prime, p)
        }
        Algorithm::Sgd => {
            if spec.p.is_some_and(|p| p != 1.0) || spec.b_prime.is_some() {
                return Err(HarnessError::invalid("sgd fixes p = 1 and has no small batch"));
            }
            let b = match spec.b {
                Some(b) => b,
                None => big_batch(problem, Mode::Online, spec.epsilon)
                    .map_err(|_| HarnessError::invalid("sgd needs --b when no variance is certified"))?,
            };
            (b, 1, 1.0)
        }
        Algorithm::Gd => {
            let n = n.ok_or_else(|| HarnessError::invalid("gd needs a finite problem"))?;
            if spec.b.is_some_and(|b| b != n) || spec.p.is_some_and(|p| p != 1.0) || spec.b_prime.is_some() {
                return Err(HarnessError::invalid("gd fixes b = n and p = 1"));
            }
            (n, 1, 1.0)
        }
    };
    if b_prime == 0 || b == 0 || b_prime > b {
        return Err(HarnessError::invalid(format!("need 1 <= b' <= b, got b = {b}, b' = {b_prime}")));
    }
    if let Some(n) = n {
        if b > n {
            return Err(HarnessError::invalid(format!("b = {b} exceeds the component count {n}")));
        }
    }
    let eta = match spec.eta {
        Some(eta) => eta,
        None => stepsize_max(l, p, b_prime)?,
    };
    let theory_mode = if spec.algorithm == Algorithm::Gd { Mode::Finite } else { mode };
    let theory_iters = inputs.map(|i| i.iterations(theory_mode, p, b_prime));
    let iters = match (spec.iters, theory_iters) {
        (Some(t), _) => t,
        (None, Some(t)) => usize::try_from(t).map_err(|_| HarnessError::invalid("theoretical T overflows"))?,
        (None, None) => return Err(HarnessError::invalid("no certified gap for the theory; set --iters")),
    };
    Ok(Resolved {
        algorithm: spec.algorithm.as_str(),
        b,
        b_prime,
        p,
        eta,
        iters,
        epsilon: spec.epsilon,
        theory_iters,
        theory_grad_complexity: theory_iters.map(|t| grad_complexity(b, t as f64, p, b_prime)),
        x0: x0.clone(),
        diagnostics_interval: spec.diagnostics_interval,
    })
}

pub fn summary_row(seed: u64, resolved: &Resolved, run: &RunResult) -> SummaryRow {
    let chosen = run.chosen_record();
    SummaryRow {
        seed,
        final_grad_norm: chosen.grad_norm_sq.map_or(f64::NAN, f64::sqrt),
        final_f: chosen.f_val.unwrap_or(f64::NAN),
        chosen_index: run.chosen_index,
        iters: resolved.iters,
        oracle_calls: run.oracle_calls,
        paper_calls: run.paper_calls,
        theory_iters: resolved.theory_iters,
        theory_grad_complexity: resolved.theory_grad_complexity,
    }
}

/// Runs every seed in parallel; results come back in seed order.
pub fn run_seeds<P: FiniteSumProblem + Sync + ?Sized>(
    pool: &rayon::ThreadPool,
    problem: &P,
    resolved: &Resolved,
    seeds: &[u64],
) -> Result<Vec<RunResult>> {
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| Ok(run_page(problem, &resolved.config(seed)?)?))
            .collect()
    })
}

pub struct ExperimentOutcome {
    pub resolved: Resolved,
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_seed{seed}.csv"))
}

/// `run`: one trace CSV per seed, a summary CSV in seed order, and the
/// resolved parameters as JSON.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let instance = build_instance(spec)?;
    let resolved = resolve(&*instance.problem, &instance.x0, spec)?;
    let dir = &spec.output_dir;
    ensure_dir(dir)?;
    let pool = worker_pool()?;
    let problem = &*instance.problem;
    let rows: Vec<SummaryRow> = pool.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| {
                let run = run_page(problem, &resolved.config(seed)?)?;
                write_trace(&trace_path(dir, seed), &run.trace)?;
                Ok(summary_row(seed, &resolved, &run))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary_path = dir.join("summary.csv");
    write_summary(&summary_path, &rows)?;
    let resolved_path = dir.join("resolved.json");
    let json = serde_json::to_string_pretty(&resolved).expect("plain data serializes");
    std::fs::write(&resolved_path, json + "\n").map_err(|e| HarnessError::io(&resolved_path, e))?;
    Ok(ExperimentOutcome { resolved, rows, summary_path })
}
