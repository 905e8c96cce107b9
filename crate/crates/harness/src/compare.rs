//! `compare`: PAGE, SGD and GD on one problem under the same expected
//! `paper_calls` budget.
//!
//! PAGE runs with the spec's resolved parameters and sets the budget `B`
//! (mean `paper_calls` over seeds). SGD uses the batch `b′` of the PAGE run
//! and GD the full batch, both at PAGE's stepsize, for `max(1, ⌊(B - b)/b⌋)`
//! iterations. Traces go to `trace_{algorithm}_seed{seed}.csv`.

use std::path::{Path, PathBuf};

use page_core::FiniteSumProblem;

use crate::error::{HarnessError, Result};
use crate::experiment::{resolve, run_seeds, summary_row, Resolved};
use crate::output::{ensure_dir, fmt_f64, write_rows, write_summary, write_trace, SummaryRow};
use crate::spec::{build_instance, Algorithm, ExperimentSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub algorithm: &'static str,
    pub b: usize,
    pub b_prime: usize,
    pub p: f64,
    pub eta: f64,
    pub iters: usize,
    pub mean_paper_calls: f64,
    pub mean_final_grad_norm: f64,
    pub se_final_grad_norm: f64,
}

pub const COMPARE_HEADER: [&str; 9] = [
    "algorithm",
    "b",
    "b_prime",
    "p",
    "eta",
    "T",
    "mean_paper_calls",
    "mean_final_grad_norm",
    "se_final_grad_norm",
];

pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub summaries: Vec<(&'static str, Vec<SummaryRow>)>,
    pub output_dir: PathBuf,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn execute<P: FiniteSumProblem + Sync + ?Sized>(
    pool: &rayon::ThreadPool,
    problem: &P,
    resolved: &Resolved,
    seeds: &[u64],
    dir: &Path,
) -> Result<(CompareRow, Vec<SummaryRow>)> {
    let runs = run_seeds(pool, problem, resolved, seeds)?;
    for (seed, run) in seeds.iter().zip(&runs) {
        write_trace(&dir.join(format!("trace_{}_seed{seed}.csv", resolved.algorithm)), &run.trace)?;
    }
    let rows: Vec<SummaryRow> = seeds.iter().zip(&runs).map(|(s, r)| summary_row(*s, resolved, r)).collect();
    let calls: Vec<f64> = runs.iter().map(|r| r.paper_calls as f64).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.final_grad_norm).collect();
    let (mean_norm, se_norm) = mean_se(&norms);
    Ok((
        CompareRow {
            algorithm: resolved.algorithm,
            b: resolved.b,
            b_prime: resolved.b_prime,
            p: resolved.p,
            eta: resolved.eta,
            iters: resolved.iters,
            mean_paper_calls: mean_se(&calls).0,
            mean_final_grad_norm: mean_norm,
            se_final_grad_norm: se_norm,
        },
        rows,
    ))
}

/// Iterations of a `p = 1` method with batch `b` that fit in `budget`.
pub fn iterations_within(budget: f64, b: usize) -> usize {
    (((budget - b as f64) / b as f64).floor().max(1.0)) as usize
}

pub fn compare(pool: &rayon::ThreadPool, spec: &ExperimentSpec) -> Result<CompareOutcome> {
    let page_spec = ExperimentSpec { algorithm: Algorithm::Page, ..spec.clone() };
    page_spec.validate()?;
    let instance = build_instance(&page_spec)?;
    let problem = &*instance.problem;
    let page = resolve(problem, &instance.x0, &page_spec)?;
    let dir = &spec.output_dir;
    ensure_dir(dir)?;
    let (page_row, page_summary) = execute(pool, problem, &page, &spec.seeds, dir)?;
    let budget = page_row.mean_paper_calls;

    let base = ExperimentSpec { p: None, b_prime: None, b: None, eta: Some(page.eta), ..page_spec.clone() };
    let sgd_b = page.b_prime;
    let sgd_spec = ExperimentSpec {
        algorithm: Algorithm::Sgd,
        b: Some(sgd_b),
        iters: Some(iterations_within(budget, sgd_b)),
        ..base.clone()
    };
    let mut others = vec![sgd_spec];
    if let Some(n) = problem.components().finite() {
        others.push(ExperimentSpec {
            algorithm: Algorithm::Gd,
            mode: crate::spec::ModeSpec::Finite,
            iters: Some(iterations_within(budget, n)),
            ..base
        });
    }
    let mut rows = vec![page_row];
    let mut summaries = vec![("page", page_summary)];
    for s in others {
        let resolved = resolve(problem, &instance.x0, &s)?;
        let (row, summary) = execute(pool, problem, &resolved, &spec.seeds, dir)?;
        summaries.push((row.algorithm, summary));
        rows.push(row);
    }

    write_rows(
        &dir.join("compare.csv"),
        &COMPARE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.algorithm.to_string(),
                r.b.to_string(),
                r.b_prime.to_string(),
                fmt_f64(r.p),
                fmt_f64(r.eta),
                r.iters.to_string(),
                fmt_f64(r.mean_paper_calls),
                fmt_f64(r.mean_final_grad_norm),
                fmt_f64(r.se_final_grad_norm),
            ]
        }),
    )?;
    for (name, summary) in &summaries {
        write_summary(&dir.join(format!("summary_{name}.csv")), summary)?;
    }
    if rows.iter().any(|r| !r.mean_final_grad_norm.is_finite()) {
        return Err(HarnessError::invalid("non-finite gradient norm in comparison"));
    }
    Ok(CompareOutcome { rows, summaries, output_dir: dir.clone() })
}
