//! Executable checks of the inequalities behind the PAGE convergence proof.
//!
//! Deterministic checks pass when `margin = rhs - lhs ≥ -tolerance`. Monte
//! Carlo checks estimate an expectation from replicates and pass when
//! `margin ≥ -3·SE` (plus a floating-point floor of `1e-12·(1 + |rhs|)` so
//! that zero-variance instances compare as exact). Expectations of the
//! estimator recursion are conditional on `(g_t, x_t, x_{t+1})`: the state
//! is fixed and only the next step is randomized.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::estimator::{EstimatorError, EstimatorParams, EstimatorState};
use crate::linalg::Vector;
use crate::optimizer::{run_page, PageConfig, RunError};
use crate::problems::{ComponentCount, FiniteSumProblem};
use crate::rng::RandomSource;

/// Number of standard errors a Monte Carlo estimate may overshoot.
pub const MC_SIGMAS: f64 = 3.0;
/// Relative tolerance of deterministic per-step audits.
pub const DETERMINISTIC_TOL: f64 = 1e-9;
/// Tolerance of the exact-enumeration variance check.
pub const EXACT_TOL: f64 = 1e-10;
/// Largest outcome tree the exact check will enumerate.
pub const MAX_OUTCOMES: usize = 1 << 20;
/// Largest component count accepted by the exact check.
pub const MAX_EXACT_COMPONENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("missing certified constant: {0}")]
    MissingConstant(&'static str),
    #[error("outcome tree of {0} leaves is too large to enumerate")]
    TreeTooLarge(usize),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub passed: bool,
    pub replicates: u64,
    /// Standard error of the estimated margin (Monte Carlo checks only).
    pub standard_error: Option<f64>,
    /// Allowed negative margin.
    pub tolerance: f64,
}

impl CheckReport {
    pub fn deterministic(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            passed: margin >= -tolerance,
            replicates: 1,
            standard_error: None,
            tolerance,
        }
    }

    pub fn monte_carlo(name: &str, lhs: f64, rhs: f64, standard_error: f64, replicates: u64) -> Self {
        let margin = rhs - lhs;
        let tolerance = MC_SIGMAS * standard_error + 1e-12 * (1.0 + rhs.abs());
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            passed: margin >= -tolerance,
            replicates,
            standard_error: Some(standard_error),
            tolerance,
        }
    }

    /// Collapses many reports into the one closest to failing; passes only
    /// if all of them pass.
    pub fn worst_of(name: &str, reports: &[CheckReport]) -> Option<CheckReport> {
        let worst = reports.iter().min_by(|a, b| {
            (a.margin + a.tolerance).partial_cmp(&(b.margin + b.tolerance)).unwrap_or(core::cmp::Ordering::Equal)
        })?;
        let mut out = worst.clone();
        out.name = name.to_string();
        out.passed = reports.iter().all(|r| r.passed);
        out.replicates = reports.iter().map(|r| r.replicates).sum();
        Some(out)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / m;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (m - 1.0);
    (mean, libm::sqrt(var / m))
}

fn random_point(rng: &mut RandomSource, dim: usize, scale: f64) -> Vector {
    Vector::from_raw(rng.normal_vec(dim).into_iter().map(|v| scale * v).collect())
}

fn sigma_term<P: FiniteSumProblem + ?Sized>(problem: &P, b: usize) -> Result<Option<f64>, VerifyError> {
    if problem.components().exceeds(b) {
        let s = problem.constants().sigma_sq.ok_or(VerifyError::MissingConstant("sigma_sq"))?;
        Ok(Some(s))
    } else {
        Ok(None)
    }
}

/// Descent relation for one step `x_{t+1} = x_t - η g_t`:
///
/// `f(x_{t+1}) ≤ f(x_t) - (η/2)‖∇f(x_t)‖² - (1/(2η) - L/2)‖x_{t+1} - x_t‖² + (η/2)‖g_t - ∇f(x_t)‖²`
pub fn check_descent_lemma<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x_t: &Vector,
    g_t: &Vector,
    eta: f64,
) -> Result<CheckReport, VerifyError> {
    if !(eta > 0.0) {
        return Err(VerifyError::InvalidInput("stepsize must be positive"));
    }
    if x_t.len() != problem.dim() || g_t.len() != problem.dim() {
        return Err(VerifyError::InvalidInput("dimension mismatch"));
    }
    let l = problem.constants().smoothness;
    let x_next = Vector::axpy(-eta, g_t, x_t).map_err(|_| VerifyError::InvalidInput("non-finite step"))?;
    let grad = problem.full_gradient(x_t);
    let f_t = problem.value(x_t);
    let lhs = problem.value(&x_next);
    let rhs = f_t - 0.5 * eta * grad.norm_sq()
        - (0.5 / eta - 0.5 * l) * x_next.dist_sq(x_t).expect("same dim")
        + 0.5 * eta * g_t.dist_sq(&grad).expect("same dim");
    Ok(CheckReport::deterministic("descent_lemma", lhs, rhs, DETERMINISTIC_TOL * (1.0 + f_t.abs())))
}

/// The descent relation at `draws` random `(x, g, η ≤ 1/L)` triples.
pub fn audit_descent_lemma<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    draws: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let mut rng = RandomSource::new(seed);
    let l = problem.constants().smoothness;
    let d = problem.dim();
    let mut reports = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = random_point(&mut rng, d, 2.0);
        let mut g = problem.full_gradient(&x);
        g.add_scaled_assign(rng.uniform(), &random_point(&mut rng, d, 1.0)).expect("same dim");
        let eta = (1.0 - rng.uniform()) / l;
        reports.push(check_descent_lemma(problem, &x, &g, eta)?);
    }
    CheckReport::worst_of("descent_lemma_audit", &reports).ok_or(VerifyError::InvalidInput("no draws"))
}

/// `E[‖g_{t+1} - ∇f(x_{t+1})‖²]` computed exactly on a finite problem with
/// `b = n`, by weighting every leaf of the outcome tree: the big branch
/// (exact gradient, zero error) and all `n^{b′}` ordered draws of `I′`.
pub fn exact_next_error_sq<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    g_t: &Vector,
    x_t: &Vector,
    x_next: &Vector,
    p: f64,
    b_prime: usize,
) -> Result<f64, VerifyError> {
    let n = problem
        .components()
        .finite()
        .ok_or(VerifyError::InvalidInput("exact enumeration needs a finite problem"))?;
    if n > MAX_EXACT_COMPONENTS {
        return Err(VerifyError::InvalidInput("too many components to enumerate"));
    }
    if !(p > 0.0 && p <= 1.0) || b_prime == 0 {
        return Err(VerifyError::InvalidInput("need p in (0, 1] and b_prime >= 1"));
    }
    let leaves = (0..b_prime).try_fold(1usize, |acc, _| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if leaves > MAX_OUTCOMES {
        return Err(VerifyError::TreeTooLarge(leaves));
    }
    let d = problem.dim();
    let full_next = problem.full_gradient(x_next);
    // The big branch with b = n returns ∇f(x_{t+1}) itself.
    let big_error = full_next.dist_sq(&full_next).expect("same dim");
    let diffs: Vec<Vector> = (0..n)
        .map(|i| {
            let mut diff = Vector::zeros(d);
            problem.add_component_gradient(i, x_next, 1.0, &mut diff);
            problem.add_component_gradient(i, x_t, -1.0, &mut diff);
            diff
        })
        .collect();
    // base = g_t - ∇f(x_{t+1})
    let base = g_t.sub(&full_next).map_err(|_| VerifyError::InvalidInput("dimension mismatch"))?;
    let mut odometer = alloc::vec![0usize; b_prime];
    let mut total = 0.0;
    let weight = 1.0 / b_prime as f64;
    loop {
        let mut e = base.clone();
        for &i in &odometer {
            e.add_scaled_assign(weight, &diffs[i]).expect("same dim");
        }
        total += e.norm_sq();
        let mut k = 0;
        loop {
            if k == b_prime {
                let small = total / leaves as f64;
                return Ok(p * big_error + (1.0 - p) * small);
            }
            odometer[k] += 1;
            if odometer[k] < n {
                break;
            }
            odometer[k] = 0;
            k += 1;
        }
    }
}

/// Finite-sum variance recursion with the exact enumerated expectation:
///
/// `E[‖g_{t+1} - ∇f(x_{t+1})‖²] ≤ (1-p)‖g_t - ∇f(x_t)‖² + ((1-p)L²/b′)‖x_{t+1} - x_t‖²`
pub fn check_variance_recursion_exact<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    g_t: &Vector,
    x_t: &Vector,
    x_next: &Vector,
    p: f64,
    b_prime: usize,
) -> Result<CheckReport, VerifyError> {
    let lhs = exact_next_error_sq(problem, g_t, x_t, x_next, p, b_prime)?;
    let l = problem.constants().smoothness;
    let err_t = g_t.dist_sq(&problem.full_gradient(x_t)).expect("same dim");
    let rhs = (1.0 - p) * err_t
        + (1.0 - p) * l * l / b_prime as f64 * x_next.dist_sq(x_t).expect("same dim");
    Ok(CheckReport::deterministic("variance_recursion_exact", lhs, rhs, EXACT_TOL * rhs.abs().max(1.0)))
}

/// Random state `(g_t, x_t, x_{t+1})` around the problem's natural scale.
pub fn random_state<P: FiniteSumProblem + ?Sized>(problem: &P, rng: &mut RandomSource) -> (Vector, Vector, Vector) {
    let d = problem.dim();
    let x_t = random_point(rng, d, 1.0);
    let mut g_t = problem.full_gradient(&x_t);
    g_t.add_scaled_assign(rng.uniform(), &random_point(rng, d, 1.0)).expect("same dim");
    let l = problem.constants().smoothness;
    let x_next = Vector::axpy(-rng.uniform() / l, &g_t, &x_t).expect("finite");
    (g_t, x_t, x_next)
}

/// Exact variance recursion over `states` random states.
pub fn audit_variance_recursion_exact<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    p: f64,
    b_prime: usize,
    states: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let mut rng = RandomSource::new(seed);
    let mut reports = Vec::with_capacity(states);
    for _ in 0..states {
        let (g, x, x_next) = random_state(problem, &mut rng);
        reports.push(check_variance_recursion_exact(problem, &g, &x, &x_next, p, b_prime)?);
    }
    CheckReport::worst_of("variance_recursion_exact", &reports).ok_or(VerifyError::InvalidInput("no states"))
}

/// Monte Carlo samples of `‖g_{t+1} - ∇f(x_{t+1})‖²` from a fixed state.
pub fn sample_next_error_sq<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    g_t: &Vector,
    x_t: &Vector,
    x_next: &Vector,
    params: &EstimatorParams,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>, VerifyError> {
    params.validate_for(problem)?;
    let mut rng = RandomSource::new(seed);
    let full_next = problem.full_gradient(x_next);
    let template = EstimatorState::from_parts(g_t.clone(), x_t.clone())?;
    let mut samples = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let mut state = template.clone();
        state.step(problem, params, x_next.clone(), &mut rng)?;
        samples.push(state.gradient().dist_sq(&full_next).expect("same dim"));
    }
    Ok(samples)
}

/// Online variance recursion, by Monte Carlo over the next step:
///
/// `E[‖g_{t+1} - ∇f(x_{t+1})‖²] ≤ (1-p)‖g_t - ∇f(x_t)‖² + ((1-p)L²/b′)‖x_{t+1} - x_t‖² + 1{b<n} pσ²/b`
#[allow(clippy::too_many_arguments)]
pub fn check_variance_recursion_online<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    g_t: &Vector,
    x_t: &Vector,
    x_next: &Vector,
    p: f64,
    b: usize,
    b_prime: usize,
    replicates: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    if replicates < 2 {
        return Err(VerifyError::InvalidInput("need at least 2 replicates"));
    }
    let params = EstimatorParams::new(b, b_prime, p)?;
    let samples = sample_next_error_sq(problem, g_t, x_t, x_next, &params, replicates, seed)?;
    let (lhs, se) = mean_and_se(&samples);
    let l = problem.constants().smoothness;
    let err_t = g_t.dist_sq(&problem.full_gradient(x_t)).expect("same dim");
    let indicator = sigma_term(problem, b)?.map_or(0.0, |s| p * s / b as f64);
    let rhs = (1.0 - p) * err_t
        + (1.0 - p) * l * l / b_prime as f64 * x_next.dist_sq(x_t).expect("same dim")
        + indicator;
    Ok(CheckReport::monte_carlo("variance_recursion_online", lhs, rhs, se, replicates as u64))
}

/// `E[Φ₀] ≤ f(x⁰) - f* + 1{b<n} ησ²/(2pb)` over fresh draws of `g⁰`.
#[allow(clippy::too_many_arguments)]
pub fn check_phi0_bound<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    b: usize,
    p: f64,
    eta: f64,
    replicates: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let f_star = problem.constants().f_star.ok_or(VerifyError::MissingConstant("f_star"))?;
    if replicates < 1 {
        return Err(VerifyError::InvalidInput("need at least 1 replicate"));
    }
    let params = EstimatorParams::new(b, 1, p)?;
    let gap = problem.value(x0) - f_star;
    let full = problem.full_gradient(x0);
    let mut rng = RandomSource::new(seed);
    let mut samples = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let state = EstimatorState::init(problem, &params, x0.clone(), &mut rng)?;
        samples.push(gap + eta / (2.0 * p) * state.gradient().dist_sq(&full).expect("same dim"));
    }
    let (lhs, se) = mean_and_se(&samples);
    let rhs = gap + sigma_term(problem, b)?.map_or(0.0, |s| eta * s / (2.0 * p * b as f64));
    Ok(CheckReport::monte_carlo("phi0_bound", lhs, rhs, se, replicates as u64))
}

/// Per-seed telescoping quantities from one run with diagnostics at every step.
struct Telescope {
    phi_0: f64,
    phi_t: f64,
    grad_sum: f64,
}

fn telescope<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &PageConfig,
    seed: u64,
) -> Result<Telescope, VerifyError> {
    let cfg = config.clone().with_seed(seed).with_diagnostics(1);
    let run = run_page(problem, &cfg)?;
    let t = cfg.iters;
    let phi = |k: usize| run.trace[k].lyapunov.ok_or(VerifyError::MissingConstant("f_star"));
    let grad_sum = run.trace[..t].iter().map(|r| r.grad_norm_sq.expect("diagnostics on")).sum();
    Ok(Telescope { phi_0: phi(0)?, phi_t: phi(t)?, grad_sum })
}

/// Aggregate Lyapunov decrease over seeded runs:
///
/// `E[Φ_T] ≤ E[Φ₀] - (η/2) Σ_{t<T} E[‖∇f(x_t)‖²] + 1{b<n} ηTσ²/(2b)`
pub fn check_lyapunov_telescoping<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &PageConfig,
    seeds: &[u64],
) -> Result<CheckReport, VerifyError> {
    if problem.constants().f_star.is_none() {
        return Err(VerifyError::MissingConstant("f_star"));
    }
    if seeds.is_empty() {
        return Err(VerifyError::InvalidInput("need at least one seed"));
    }
    let eta = config.eta;
    let b = config.params.b;
    let extra = sigma_term(problem, b)?.map_or(0.0, |s| eta * config.iters as f64 * s / (2.0 * b as f64));
    let mut lhs = Vec::with_capacity(seeds.len());
    let mut rhs = Vec::with_capacity(seeds.len());
    let mut gaps = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let tel = telescope(problem, config, seed)?;
        let r = tel.phi_0 - 0.5 * eta * tel.grad_sum + extra;
        lhs.push(tel.phi_t);
        rhs.push(r);
        gaps.push(r - tel.phi_t);
    }
    let (lhs_mean, _) = mean_and_se(&lhs);
    let (rhs_mean, _) = mean_and_se(&rhs);
    let (_, se) = mean_and_se(&gaps);
    let name = if extra > 0.0 { "lyapunov_telescoping_online" } else { "lyapunov_telescoping" };
    Ok(CheckReport::monte_carlo(name, lhs_mean, rhs_mean, se, seeds.len() as u64))
}

/// `E‖∇f(x̂)‖ ≤ sqrt(E‖∇f(x̂)‖²)` over seeded runs.
pub fn check_jensen_output<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &PageConfig,
    seeds: &[u64],
) -> Result<CheckReport, VerifyError> {
    if seeds.is_empty() {
        return Err(VerifyError::InvalidInput("need at least one seed"));
    }
    let mut norms = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let run = run_page(problem, &config.clone().with_seed(seed))?;
        norms.push(problem.full_gradient(&run.x_hat).norm());
    }
    let (lhs, se) = mean_and_se(&norms);
    let mean_sq = norms.iter().map(|v| v * v).sum::<f64>() / norms.len() as f64;
    Ok(CheckReport::monte_carlo("jensen_output", lhs, libm::sqrt(mean_sq), se, seeds.len() as u64))
}

/// Descent relation audited along an actual run, step by step.
pub fn check_descent_along_run<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    config: &PageConfig,
) -> Result<CheckReport, VerifyError> {
    let run = run_page(problem, &config.clone().with_diagnostics(1))?;
    let eta = config.eta;
    if !(eta > 0.0) {
        return Err(VerifyError::InvalidInput("stepsize must be positive"));
    }
    let l = problem.constants().smoothness;
    let reports: Vec<CheckReport> = run
        .trace
        .windows(2)
        .map(|w| {
            let (now, next) = (&w[0], &w[1]);
            let f_t = now.f_val.expect("diagnostics on");
            let rhs = f_t - 0.5 * eta * now.grad_norm_sq.expect("diagnostics on")
                - (0.5 / eta - 0.5 * l) * eta * eta * now.est_norm_sq.expect("diagnostics on")
                + 0.5 * eta * now.est_err_sq.expect("diagnostics on");
            let lhs = next.f_val.expect("diagnostics on");
            CheckReport::deterministic("descent_along_run", lhs, rhs, DETERMINISTIC_TOL * (1.0 + f_t.abs()))
        })
        .collect();
    CheckReport::worst_of("descent_along_run", &reports).ok_or(VerifyError::InvalidInput("no steps"))
}

/// Average smoothness at random pairs:
/// `(1/n) Σ_i ‖∇f_i(x) - ∇f_i(y)‖² ≤ L²‖x - y‖²`.
pub fn check_average_smoothness<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    pairs: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let mut rng = RandomSource::new(seed);
    let d = problem.dim();
    let pool = problem.sample_pool();
    let l = problem.constants().smoothness;
    let mut reports = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let x = random_point(&mut rng, d, 2.0);
        let y = random_point(&mut rng, d, 2.0);
        let lhs = (0..pool)
            .map(|i| problem.component_gradient(i, &x).dist_sq(&problem.component_gradient(i, &y)).expect("same dim"))
            .sum::<f64>()
            / pool as f64;
        let rhs = l * l * x.dist_sq(&y).expect("same dim");
        reports.push(CheckReport::deterministic("average_smoothness", lhs, rhs, DETERMINISTIC_TOL * rhs));
    }
    CheckReport::worst_of("average_smoothness", &reports).ok_or(VerifyError::InvalidInput("no pairs"))
}

/// Bounded variance at random points:
/// `(1/n) Σ_i ‖∇f_i(x) - ∇f(x)‖² ≤ σ²`.
pub fn check_bounded_variance<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    points: usize,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let sigma_sq = problem.constants().sigma_sq.ok_or(VerifyError::MissingConstant("sigma_sq"))?;
    let mut rng = RandomSource::new(seed);
    let d = problem.dim();
    let pool = problem.sample_pool();
    let mut reports = Vec::with_capacity(points);
    for _ in 0..points {
        let x = random_point(&mut rng, d, 2.0);
        let full = problem.full_gradient(&x);
        let lhs = (0..pool)
            .map(|i| problem.component_gradient(i, &x).dist_sq(&full).expect("same dim"))
            .sum::<f64>()
            / pool as f64;
        reports.push(CheckReport::deterministic(
            "bounded_variance",
            lhs,
            sigma_sq,
            DETERMINISTIC_TOL * sigma_sq.max(1e-300) + 1e-24,
        ));
    }
    CheckReport::worst_of("bounded_variance", &reports).ok_or(VerifyError::InvalidInput("no points"))
}

/// `1{b < n}` for a problem, exposed for report writers.
pub fn indicator(components: ComponentCount, b: usize) -> f64 {
    if components.exceeds(b) {
        1.0
    } else {
        0.0
    }
}
