//! The PAGE outer loop and its GD / minibatch-SGD reductions.
//!
//! A run draws the output index uniformly from `{0, …, T-1}` before
//! anything else, forms `g⁰`, then repeats `x_{t+1} = x_t - η g_t` followed
//! by one estimator step, `T` times. Only the chosen iterate is retained.

use alloc::vec::Vec;

use thiserror::Error;

use crate::estimator::{Branch, EstimatorError, EstimatorParams, EstimatorState};
use crate::linalg::Vector;
use crate::problems::FiniteSumProblem;
use crate::rng::RandomSource;

/// Iterates or objective values beyond this magnitude abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("run diverged at iteration {t}")]
    Diverged { t: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageConfig {
    pub eta: f64,
    pub params: EstimatorParams,
    /// Iteration count `T`.
    pub iters: usize,
    /// Target accuracy, reported only.
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub x0: Vector,
    /// Record diagnostics every this many iterations; 0 disables them except
    /// at the chosen output index.
    pub diagnostics_interval: usize,
    /// Keep every iterate in the result (tests and audits).
    pub keep_iterates: bool,
}

impl PageConfig {
    pub fn new(eta: f64, params: EstimatorParams, iters: usize, x0: Vector) -> Self {
        Self {
            eta,
            params,
            iters,
            epsilon: None,
            seed: 0,
            x0,
            diagnostics_interval: 1,
            keep_iterates: false,
        }
    }

    /// Full-gradient descent: `p = 1`, `b = n`.
    pub fn gd<P: FiniteSumProblem + ?Sized>(
        problem: &P,
        eta: f64,
        iters: usize,
        x0: Vector,
    ) -> Result<Self, RunError> {
        let n = problem
            .components()
            .finite()
            .ok_or(RunError::InvalidConfig("gradient descent needs a finite problem"))?;
        Ok(Self::new(eta, EstimatorParams::new(n, 1, 1.0)?, iters, x0))
    }

    /// Minibatch SGD: `p = 1` with batch `b`.
    pub fn sgd(eta: f64, b: usize, iters: usize, x0: Vector) -> Result<Self, RunError> {
        Ok(Self::new(eta, EstimatorParams::new(b, 1, 1.0)?, iters, x0))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_diagnostics(mut self, interval: usize) -> Self {
        self.diagnostics_interval = interval;
        self
    }

    pub fn keeping_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn validate<P: FiniteSumProblem + ?Sized>(&self, problem: &P) -> Result<(), RunError> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(RunError::InvalidConfig("stepsize must be finite and nonnegative"));
        }
        if self.iters == 0 {
            return Err(RunError::InvalidConfig("iteration count must be at least 1"));
        }
        if self.x0.len() != problem.dim() {
            return Err(RunError::InvalidConfig("initial point has the wrong dimension"));
        }
        self.params.validate_for(problem)?;
        Ok(())
    }
}

/// One row of the per-iteration trace. Diagnostic fields use exact full
/// gradients and are never charged to either oracle counter.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub t: usize,
    pub branch: Branch,
    pub f_val: Option<f64>,
    /// `‖∇f(x_t)‖²`.
    pub grad_norm_sq: Option<f64>,
    /// `‖g_t - ∇f(x_t)‖²`.
    pub est_err_sq: Option<f64>,
    /// `‖g_t‖²`; the next step length squared is `η²‖g_t‖²`.
    pub est_norm_sq: Option<f64>,
    /// `Φ_t = f(x_t) - f* + (η/2p)‖g_t - ∇f(x_t)‖²` when `f*` is certified.
    pub lyapunov: Option<f64>,
    pub oracle_calls: u64,
    pub paper_calls: u64,
}

impl TelemetryRecord {
    pub fn has_diagnostics(&self) -> bool {
        self.f_val.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub x_hat: Vector,
    pub chosen_index: usize,
    /// `T + 1` records, `t = 0..=T`.
    pub trace: Vec<TelemetryRecord>,
    pub oracle_calls: u64,
    pub paper_calls: u64,
    pub big_steps: u64,
    pub small_steps: u64,
    /// `x⁰..=x^T` when requested.
    pub iterates: Option<Vec<Vector>>,
}

impl RunResult {
    pub fn chosen_record(&self) -> &TelemetryRecord {
        &self.trace[self.chosen_index]
    }
}

fn record<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &PageConfig,
    state: &EstimatorState,
    t: usize,
    branch: Branch,
    with_diagnostics: bool,
) -> Result<TelemetryRecord, RunError> {
    let mut rec = TelemetryRecord {
        t,
        branch,
        f_val: None,
        grad_norm_sq: None,
        est_err_sq: None,
        est_norm_sq: None,
        lyapunov: None,
        oracle_calls: state.oracle_calls(),
        paper_calls: state.paper_calls(),
    };
    if with_diagnostics {
        let x = state.point();
        let f = problem.value(x);
        if !f.is_finite() || f.abs() > DIVERGENCE_LIMIT {
            return Err(RunError::Diverged { t });
        }
        let grad = problem.full_gradient(x);
        let err = state.gradient().dist_sq(&grad).expect("dimension checked");
        rec.f_val = Some(f);
        rec.grad_norm_sq = Some(grad.norm_sq());
        rec.est_err_sq = Some(err);
        rec.est_norm_sq = Some(state.gradient().norm_sq());
        rec.lyapunov =
            problem.constants().f_star.map(|fs| f - fs + config.eta / (2.0 * config.params.p) * err);
    }
    Ok(rec)
}

/// Runs PAGE to completion and returns the uniformly chosen iterate.
pub fn run_page<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &PageConfig,
) -> Result<RunResult, RunError> {
    config.validate(problem)?;
    let params = &config.params;
    let mut rng = RandomSource::new(config.seed);
    let chosen_index = rng.index(config.iters);
    let diag_at = |t: usize| {
        t == chosen_index || (config.diagnostics_interval > 0 && t % config.diagnostics_interval == 0)
    };

    let mut state = EstimatorState::init(problem, params, config.x0.clone(), &mut rng)?;
    let mut trace = Vec::with_capacity(config.iters + 1);
    trace.push(record(problem, config, &state, 0, Branch::Init, diag_at(0))?);
    let mut iterates = config.keep_iterates.then(|| {
        let mut v = Vec::with_capacity(config.iters + 1);
        v.push(config.x0.clone());
        v
    });
    let mut x_hat = (chosen_index == 0).then(|| config.x0.clone());

    for t in 0..config.iters {
        let x_next = Vector::axpy(-config.eta, state.gradient(), state.point())
            .map_err(|_| RunError::Diverged { t: t + 1 })?;
        if x_next.norm() > DIVERGENCE_LIMIT {
            return Err(RunError::Diverged { t: t + 1 });
        }
        if let Some(its) = iterates.as_mut() {
            its.push(x_next.clone());
        }
        let branch = state.step(problem, params, x_next, &mut rng)?;
        if t + 1 == chosen_index {
            x_hat = Some(state.point().clone());
        }
        trace.push(record(problem, config, &state, t + 1, branch, diag_at(t + 1))?);
    }

    Ok(RunResult {
        x_hat: x_hat.expect("chosen index lies in 0..T"),
        chosen_index,
        trace,
        oracle_calls: state.oracle_calls(),
        paper_calls: state.paper_calls(),
        big_steps: state.big_steps(),
        small_steps: state.small_steps(),
        iterates,
    })
}

/// Deterministic full-gradient descent, delegating to [`run_page`] with
/// `p = 1` and `b = n`. The seed only picks the output index.
pub fn run_gd<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    eta: f64,
    iters: usize,
    x0: Vector,
    seed: u64,
) -> Result<RunResult, RunError> {
    let config = PageConfig::gd(problem, eta, iters, x0)?.with_seed(seed).keeping_iterates();
    run_page(problem, &config)
}

/// Minibatch SGD with batch `b`, delegating to [`run_page`] with `p = 1`.
pub fn run_sgd<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    eta: f64,
    b: usize,
    iters: usize,
    x0: Vector,
    seed: u64,
) -> Result<RunResult, RunError> {
    let config = PageConfig::sgd(eta, b, iters, x0)?.with_seed(seed).keeping_iterates();
    run_page(problem, &config)
}
