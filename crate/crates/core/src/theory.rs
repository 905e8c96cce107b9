//! Closed-form parameter choices and complexity bounds for PAGE.
//!
//! With `p = b′/(b + b′)` and `η = 1/(L(1 + sqrt((1-p)/(p b′))))`:
//!
//! * finite sum, `b = n`: `T = (2LΔ₀/ε²)(1 + sqrt((1-p)/(p b′)))`
//! * online, `b = min{⌈2σ²/ε²⌉, n}`: `T = (4LΔ₀/ε²)(1 + sqrt((1-p)/(p b′))) + 1/p`
//!
//! and in both cases the expected cost is `#grad = b + T(pb + (1-p)b′)`.
//! Counts are ceiled to integers.

use libm::{ceil, round, sqrt};

use thiserror::Error;

use crate::estimator::{EstimatorError, EstimatorParams};
use crate::linalg::Vector;
use crate::optimizer::PageConfig;
use crate::problems::{ComponentCount, FiniteSumProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("missing certified constant: {0}")]
    MissingConstant(&'static str),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Finite,
    Online,
}

/// Ceiling that ignores floating-point noise: values within `1e-9`
/// (relative) of an integer map to that integer.
pub fn ceil_count(x: f64) -> u64 {
    let r = round(x);
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r.max(0.0) as u64
    } else {
        ceil(x).max(0.0) as u64
    }
}

fn radical(p: f64, b_prime: usize) -> f64 {
    sqrt((1.0 - p) / (p * b_prime as f64))
}

/// Largest admissible stepsize `1/(L(1 + sqrt((1-p)/(p b′))))`.
pub fn stepsize_max(smoothness: f64, p: f64, b_prime: usize) -> Result<f64, TheoryError> {
    if !(smoothness > 0.0) {
        return Err(TheoryError::InvalidInput("L must be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(TheoryError::InvalidInput("p must lie in (0, 1]"));
    }
    if b_prime == 0 {
        return Err(TheoryError::InvalidInput("b_prime must be at least 1"));
    }
    Ok(1.0 / (smoothness * (1.0 + radical(p, b_prime))))
}

/// `b′/(b + b′)`.
pub fn default_probability(b: usize, b_prime: usize) -> f64 {
    b_prime as f64 / (b + b_prime) as f64
}

/// `min{⌈2σ²/ε²⌉, n}`, at least 1.
pub fn online_minibatch(sigma_sq: f64, epsilon: f64, n: ComponentCount) -> usize {
    let raw = ceil_count(2.0 * sigma_sq / (epsilon * epsilon)).max(1);
    let raw = usize::try_from(raw).unwrap_or(usize::MAX);
    match n {
        ComponentCount::Finite(n) => raw.min(n),
        ComponentCount::Streaming => raw,
    }
}

/// Real-valued finite-sum iteration count before ceiling.
pub fn iterations_finite_real(smoothness: f64, delta0: f64, epsilon: f64, p: f64, b_prime: usize) -> f64 {
    2.0 * smoothness * delta0 / (epsilon * epsilon) * (1.0 + radical(p, b_prime))
}

pub fn iterations_finite(smoothness: f64, delta0: f64, epsilon: f64, p: f64, b_prime: usize) -> u64 {
    ceil_count(iterations_finite_real(smoothness, delta0, epsilon, p, b_prime))
}

/// Real-valued online iteration count before ceiling.
pub fn iterations_online_real(smoothness: f64, delta0: f64, epsilon: f64, p: f64, b_prime: usize) -> f64 {
    4.0 * smoothness * delta0 / (epsilon * epsilon) * (1.0 + radical(p, b_prime)) + 1.0 / p
}

pub fn iterations_online(smoothness: f64, delta0: f64, epsilon: f64, p: f64, b_prime: usize) -> u64 {
    ceil_count(iterations_online_real(smoothness, delta0, epsilon, p, b_prime))
}

/// Expected gradient complexity `b + T(pb + (1-p)b′)`.
pub fn grad_complexity(b: usize, iters: f64, p: f64, b_prime: usize) -> f64 {
    b as f64 + iters * (p * b as f64 + (1.0 - p) * b_prime as f64)
}

/// `4LΔ₀√n/(ε²b′)`, the simplified finite-sum iteration bound.
pub fn finite_iterations_bound(smoothness: f64, delta0: f64, epsilon: f64, n: usize, b_prime: usize) -> f64 {
    4.0 * smoothness * delta0 * sqrt(n as f64) / (epsilon * epsilon * b_prime as f64)
}

/// `n + 8LΔ₀√n/ε²`.
pub fn finite_complexity_bound(smoothness: f64, delta0: f64, epsilon: f64, n: usize) -> f64 {
    n as f64 + 8.0 * smoothness * delta0 * sqrt(n as f64) / (epsilon * epsilon)
}

/// `8LΔ₀√b/(ε²b′) + (b + b′)/b′`.
pub fn online_iterations_bound(smoothness: f64, delta0: f64, epsilon: f64, b: usize, b_prime: usize) -> f64 {
    8.0 * smoothness * delta0 * sqrt(b as f64) / (epsilon * epsilon * b_prime as f64)
        + (b + b_prime) as f64 / b_prime as f64
}

/// `3b + 16LΔ₀√b/ε²`.
pub fn online_complexity_bound(smoothness: f64, delta0: f64, epsilon: f64, b: usize) -> f64 {
    3.0 * b as f64 + 16.0 * smoothness * delta0 * sqrt(b as f64) / (epsilon * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub smoothness: f64,
    pub delta0: f64,
    pub epsilon: f64,
    pub components: ComponentCount,
    pub sigma_sq: Option<f64>,
}

/// Fully resolved parameter choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPlan {
    pub b: usize,
    pub b_prime: usize,
    pub p: f64,
    pub eta: f64,
    pub iters: u64,
    pub grad_complexity: f64,
}

/// `⌊√b⌋`, at least 1.
pub fn default_small_batch(b: usize) -> usize {
    let mut r = sqrt(b as f64) as usize;
    while (r + 1) * (r + 1) <= b {
        r += 1;
    }
    while r * r > b {
        r -= 1;
    }
    r.max(1)
}

impl TheoryInputs {
    fn validate(&self) -> Result<(), TheoryError> {
        if !(self.smoothness > 0.0) || !self.smoothness.is_finite() {
            return Err(TheoryError::InvalidInput("L must be positive"));
        }
        if !(self.delta0 >= 0.0) || !self.delta0.is_finite() {
            return Err(TheoryError::InvalidInput("delta0 must be nonnegative"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(TheoryError::InvalidInput("epsilon must be positive"));
        }
        Ok(())
    }

    /// Big batch for the mode: `n` (finite) or `min{⌈2σ²/ε²⌉, n}` (online).
    pub fn big_batch(&self, mode: Mode) -> Result<usize, TheoryError> {
        match mode {
            Mode::Finite => self
                .components
                .finite()
                .ok_or(TheoryError::InvalidInput("finite mode needs a finite component count")),
            Mode::Online => {
                let sigma_sq = self.sigma_sq.ok_or(TheoryError::MissingConstant("sigma_sq"))?;
                Ok(online_minibatch(sigma_sq, self.epsilon, self.components))
            }
        }
    }

    /// Iteration count for the mode at the given `(p, b′)`, at least 1.
    pub fn iterations(&self, mode: Mode, p: f64, b_prime: usize) -> u64 {
        let t = match mode {
            Mode::Finite => iterations_finite(self.smoothness, self.delta0, self.epsilon, p, b_prime),
            Mode::Online => iterations_online(self.smoothness, self.delta0, self.epsilon, p, b_prime),
        };
        t.max(1)
    }

    /// `b` per mode, `b′ = ⌊√b⌋`, `p = b′/(b+b′)`, the largest admissible `η`
    /// and the matching `T`.
    pub fn plan(&self, mode: Mode) -> Result<TheoryPlan, TheoryError> {
        self.validate()?;
        let b = self.big_batch(mode)?;
        let b_prime = default_small_batch(b);
        let p = default_probability(b, b_prime);
        let eta = stepsize_max(self.smoothness, p, b_prime)?;
        let iters = self.iterations(mode, p, b_prime);
        Ok(TheoryPlan { b, b_prime, p, eta, iters, grad_complexity: grad_complexity(b, iters as f64, p, b_prime) })
    }
}

/// Theory inputs read off a problem's certificate at `x0`. `Δ₀` uses `f*`
/// when certified and the certified lower bound otherwise.
pub fn theory_inputs<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    epsilon: f64,
) -> Result<TheoryInputs, TheoryError> {
    let c = problem.constants();
    let delta0 = c
        .initial_gap_bound(problem.value(x0))
        .ok_or(TheoryError::MissingConstant("f_star or a lower bound"))?;
    Ok(TheoryInputs {
        smoothness: c.smoothness,
        delta0: delta0.max(0.0),
        epsilon,
        components: problem.components(),
        sigma_sq: c.sigma_sq,
    })
}

/// Parameters from the complexity bound for `problem` started at `x0`.
pub fn auto_config<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x0: Vector,
    epsilon: f64,
    mode: Mode,
) -> Result<PageConfig, TheoryError> {
    if x0.len() != problem.dim() {
        return Err(TheoryError::InvalidInput("initial point has the wrong dimension"));
    }
    let plan = theory_inputs(problem, &x0, epsilon)?.plan(mode)?;
    let params = EstimatorParams::new(plan.b, plan.b_prime, plan.p)?;
    Ok(PageConfig::new(plan.eta, params, plan.iters as usize, x0).with_epsilon(epsilon))
}
