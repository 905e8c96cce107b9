//! `sweep-n`: complexity against the number of components.
//!
//! Each `n` gets a fresh heterogeneous quadratic rescaled to `L = 1` and a
//! start point at gap `delta0`, so the theoretical `T` is the same for every
//! `n` and only the per-iteration cost `T(pb + (1-p)b′)` changes.

use std::path::{Path, PathBuf};

use page_core::problems::HeterogeneousQuadratic;
use page_core::theory::{auto_config, theory_inputs};
use page_core::{run_page, Mode, RandomSource};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, fmt_f64, fmt_opt, write_rows};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub n_values: Vec<usize>,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    pub dim: usize,
    pub delta0: f64,
    pub problem_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n_values: vec![100, 1000, 10_000],
            epsilon: 0.1,
            seeds: (0..10).collect(),
            dim: 5,
            delta0: 1.0,
            problem_seed: 0,
            output_dir: PathBuf::from("page-sweep"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub b: usize,
    pub b_prime: usize,
    pub p: f64,
    pub eta: f64,
    pub iters: usize,
    pub runs: usize,
    /// Mean of `paper_calls - b` over seeds.
    pub mean_cost: f64,
    pub se_cost: f64,
    /// `T (pb + (1-p)b′)`.
    pub theory_cost: f64,
}

impl SweepRow {
    /// `(mean - theory) / se`; undefined when the runs agree exactly.
    pub fn z_score(&self) -> Option<f64> {
        (self.se_cost > 0.0).then(|| (self.mean_cost - self.theory_cost) / self.se_cost)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log mean_cost` on `log n`.
    pub slope: Option<f64>,
    pub theory_slope: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 11] =
    ["n", "b", "b_prime", "p", "eta", "T", "runs", "mean_cost", "se_cost", "theory_cost", "z_score"];

/// Slope of the least-squares line through `(ln x, ln y)`; needs two
/// distinct `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (logs.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

fn sweep_one(pool: &rayon::ThreadPool, opts: &SweepOptions, n: usize) -> Result<SweepRow> {
    let mut rng = RandomSource::new(opts.problem_seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let problem = HeterogeneousQuadratic::generate(&mut rng, opts.dim, n, 10.0)?.with_unit_smoothness()?;
    let x0 = problem.point_with_gap(opts.delta0, &mut rng)?;
    let config = auto_config(&problem, x0.clone(), opts.epsilon, Mode::Finite)?.with_diagnostics(0);
    let plan = theory_inputs(&problem, &x0, opts.epsilon)?.plan(Mode::Finite)?;
    let b = config.params.b;
    let costs: Vec<f64> = pool.install(|| {
        opts.seeds
            .par_iter()
            .map(|&seed| {
                let run = run_page(&problem, &config.clone().with_seed(seed))?;
                Ok((run.paper_calls - b as u64) as f64)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let m = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / m;
    let se = if costs.len() > 1 {
        (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };
    Ok(SweepRow {
        n,
        b,
        b_prime: config.params.b_prime,
        p: config.params.p,
        eta: config.eta,
        iters: config.iters,
        runs: costs.len(),
        mean_cost: mean,
        se_cost: se,
        theory_cost: plan.grad_complexity - b as f64,
    })
}

pub fn sweep_n(pool: &rayon::ThreadPool, opts: &SweepOptions) -> Result<SweepOutcome> {
    if opts.n_values.is_empty() || opts.n_values.iter().any(|n| *n == 0) {
        return Err(HarnessError::invalid("n values must be positive"));
    }
    if opts.n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::invalid("n values must be strictly ascending"));
    }
    if opts.seeds.is_empty() {
        return Err(HarnessError::invalid("seeds must not be empty"));
    }
    let rows = opts.n_values.iter().map(|&n| sweep_one(pool, opts, n)).collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(&rows.iter().map(|r| (r.n as f64, r.mean_cost)).collect::<Vec<_>>());
    let theory_slope = log_log_slope(&rows.iter().map(|r| (r.n as f64, r.theory_cost)).collect::<Vec<_>>());
    Ok(SweepOutcome { rows, slope, theory_slope })
}

pub fn write_sweep(dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    ensure_dir(dir)?;
    write_rows(
        &dir.join("sweep.csv"),
        &SWEEP_HEADER,
        outcome.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.b.to_string(),
                r.b_prime.to_string(),
                fmt_f64(r.p),
                fmt_f64(r.eta),
                r.iters.to_string(),
                r.runs.to_string(),
                fmt_f64(r.mean_cost),
                fmt_f64(r.se_cost),
                fmt_f64(r.theory_cost),
                fmt_opt(r.z_score()),
            ]
        }),
    )?;
    write_rows(
        &dir.join("sweep_fit.csv"),
        &["slope", "theory_slope"],
        [vec![fmt_opt(outcome.slope), fmt_opt(outcome.theory_slope)]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 10.0, 100.0].iter().map(|&x: &f64| (x, 3.0 * x.sqrt())).collect();
        assert!((log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn single_n_has_no_slope() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let opts = SweepOptions { n_values: vec![16], seeds: vec![0, 1], epsilon: 0.5, ..Default::default() };
        let out = sweep_n(&pool, &opts).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.slope, None);
        assert_eq!((out.rows[0].b, out.rows[0].b_prime), (16, 4));
    }

    #[test]
    fn rejects_unsorted_values() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let opts = SweepOptions { n_values: vec![100, 10], ..Default::default() };
        assert!(sweep_n(&pool, &opts).is_err());
    }
}
