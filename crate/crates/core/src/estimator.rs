//! The PAGE gradient estimator.
//!
//! `g⁰` is a size-`b` minibatch gradient at `x⁰`. Each later step either
//! recomputes a fresh size-`b` minibatch gradient at the new point
//! (probability `p`), or corrects the previous estimate with a size-`b′`
//! minibatch of gradient differences:
//!
//! ```text
//! g' = g + (1/b′) Σ_{i ∈ I′} (∇f_i(x') - ∇f_i(x))
//! ```
//!
//! Random stream order per step: the branch draw, then the minibatch draw.
//! With a finite problem and `b = n` the big branch is the exact full
//! gradient and consumes no minibatch draw.

use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::Vector;
use crate::problems::{ComponentCount, FiniteSumProblem};
use crate::rng::{RandomSource, SampleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("invalid estimator parameters: {0}")]
    InvalidParams(&'static str),
    #[error("minibatch size {b} exceeds component count {n}")]
    BatchExceedsComponents { b: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    /// Big minibatch size `b`.
    pub b: usize,
    /// Small minibatch size `b′`.
    pub b_prime: usize,
    /// Switch probability `p`, held constant.
    pub p: f64,
    /// Sampling of big minibatches when `b < n`. The small minibatch is
    /// always drawn with replacement.
    pub big_with_replacement: bool,
}

impl EstimatorParams {
    pub fn new(b: usize, b_prime: usize, p: f64) -> Result<Self, EstimatorError> {
        let params = Self { b, b_prime, p, big_with_replacement: true };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.b == 0 || self.b_prime == 0 {
            return Err(EstimatorError::InvalidParams("minibatch sizes must be at least 1"));
        }
        if self.b_prime > self.b {
            return Err(EstimatorError::InvalidParams("b_prime must not exceed b"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(EstimatorError::InvalidParams("p must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn validate_for<P: FiniteSumProblem + ?Sized>(&self, problem: &P) -> Result<(), EstimatorError> {
        self.validate()?;
        if let ComponentCount::Finite(n) = problem.components() {
            if self.b > n {
                return Err(EstimatorError::BatchExceedsComponents { b: self.b, n });
            }
        }
        Ok(())
    }

    /// Whether the big branch is the exact full gradient.
    pub fn is_full_batch<P: FiniteSumProblem + ?Sized>(&self, problem: &P) -> bool {
        problem.components() == ComponentCount::Finite(self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Init,
    Big,
    Small,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Init => "init",
            Branch::Big => "big",
            Branch::Small => "small",
        }
    }
}

/// Recursion state: the estimate `g` and the point it was formed at.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    g: Vector,
    point: Vector,
    oracle_calls: u64,
    paper_calls: u64,
    big_steps: u64,
    small_steps: u64,
    history: Option<Vec<Branch>>,
}

fn check_dim<P: FiniteSumProblem + ?Sized>(problem: &P, x: &Vector) -> Result<(), EstimatorError> {
    if x.len() != problem.dim() {
        return Err(EstimatorError::DimensionMismatch { expected: problem.dim(), found: x.len() });
    }
    Ok(())
}

/// Size-`b` minibatch gradient at `x` (exact full gradient when `b = n`).
fn big_batch_gradient<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    params: &EstimatorParams,
    x: &Vector,
    rng: &mut RandomSource,
) -> Result<Vector, EstimatorError> {
    if params.is_full_batch(problem) {
        return Ok(problem.full_gradient(x));
    }
    let with_replacement =
        params.big_with_replacement || problem.components() == ComponentCount::Streaming;
    let indices = rng.sample_indices(problem.sample_pool(), params.b, with_replacement)?;
    Ok(problem.minibatch_gradient(&indices, x))
}

impl EstimatorState {
    /// `g⁰ = (1/b) Σ_{i∈I} ∇f_i(x⁰)`; charges `b` calls to both counters.
    pub fn init<P: FiniteSumProblem + ?Sized>(
        problem: &P,
        params: &EstimatorParams,
        x0: Vector,
        rng: &mut RandomSource,
    ) -> Result<Self, EstimatorError> {
        params.validate_for(problem)?;
        check_dim(problem, &x0)?;
        let g = big_batch_gradient(problem, params, &x0, rng)?;
        Ok(Self {
            g,
            point: x0,
            oracle_calls: params.b as u64,
            paper_calls: params.b as u64,
            big_steps: 0,
            small_steps: 0,
            history: None,
        })
    }

    /// Starts recording which branch fires on each step.
    pub fn with_history(mut self) -> Self {
        self.history = Some(Vec::new());
        self
    }

    /// Builds a state from an arbitrary estimate, for checks that fix
    /// `(g_t, x_t)` and randomize only the next step.
    pub fn from_parts(g: Vector, point: Vector) -> Result<Self, EstimatorError> {
        if g.len() != point.len() {
            return Err(EstimatorError::DimensionMismatch { expected: point.len(), found: g.len() });
        }
        Ok(Self {
            g,
            point,
            oracle_calls: 0,
            paper_calls: 0,
            big_steps: 0,
            small_steps: 0,
            history: None,
        })
    }

    /// One estimator update at the point the outer loop just moved to.
    pub fn step<P: FiniteSumProblem + ?Sized>(
        &mut self,
        problem: &P,
        params: &EstimatorParams,
        x_new: Vector,
        rng: &mut RandomSource,
    ) -> Result<Branch, EstimatorError> {
        let big = if params.p >= 1.0 { true } else { rng.bernoulli(params.p)? };
        let branch = if big { Branch::Big } else { Branch::Small };
        self.step_on_branch(problem, params, x_new, branch, rng)?;
        Ok(branch)
    }

    /// Applies the given branch without drawing it.
    pub fn step_on_branch<P: FiniteSumProblem + ?Sized>(
        &mut self,
        problem: &P,
        params: &EstimatorParams,
        x_new: Vector,
        branch: Branch,
        rng: &mut RandomSource,
    ) -> Result<(), EstimatorError> {
        check_dim(problem, &x_new)?;
        match branch {
            Branch::Big | Branch::Init => {
                self.g = big_batch_gradient(problem, params, &x_new, rng)?;
                self.oracle_calls += params.b as u64;
                self.paper_calls += params.b as u64;
                self.big_steps += 1;
            }
            Branch::Small => {
                let indices = rng.sample_indices(problem.sample_pool(), params.b_prime, true)?;
                let weight = 1.0 / params.b_prime as f64;
                for i in indices {
                    problem.add_component_gradient(i, &x_new, weight, &mut self.g);
                    problem.add_component_gradient(i, &self.point, -weight, &mut self.g);
                }
                self.oracle_calls += 2 * params.b_prime as u64;
                self.paper_calls += params.b_prime as u64;
                self.small_steps += 1;
            }
        }
        if let Some(h) = self.history.as_mut() {
            h.push(branch);
        }
        self.point = x_new;
        Ok(())
    }

    pub fn gradient(&self) -> &Vector {
        &self.g
    }

    /// The point `x_t` at which the current estimate was formed.
    pub fn point(&self) -> &Vector {
        &self.point
    }

    /// Physical component-gradient evaluations (`2b′` per small step).
    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    /// Calls under the `b + T(pb + (1-p)b′)` convention (`b′` per small step).
    pub fn paper_calls(&self) -> u64 {
        self.paper_calls
    }

    pub fn big_steps(&self) -> u64 {
        self.big_steps
    }

    pub fn small_steps(&self) -> u64 {
        self.small_steps
    }

    pub fn history(&self) -> Option<&[Branch]> {
        self.history.as_deref()
    }

    /// `‖g_t - ∇f(x_t)‖²`, evaluated with the exact gradient.
    pub fn error_sq<P: FiniteSumProblem + ?Sized>(&self, problem: &P) -> f64 {
        self.g.dist_sq(&problem.full_gradient(&self.point)).expect("dimension checked")
    }
}

/// `E[g_{t+1} | g_t, x_t, x_{t+1}] - ∇f(x_{t+1})`, computed by averaging
/// over the whole sample pool. Does not touch any oracle counter.
pub fn conditional_bias<P: FiniteSumProblem + ?Sized>(
    state: &EstimatorState,
    problem: &P,
    x_new: &Vector,
    params: &EstimatorParams,
) -> Result<Vector, EstimatorError> {
    check_dim(problem, x_new)?;
    params.validate()?;
    let pool = problem.sample_pool();
    let full_new = problem.full_gradient(x_new);
    let weight = 1.0 / pool as f64;
    // Big branch: exact when b = n, otherwise the pool mean of ∇f_i(x').
    let big_mean = if params.is_full_batch(problem) {
        full_new.clone()
    } else {
        let mut m = Vector::zeros(problem.dim());
        for i in 0..pool {
            problem.add_component_gradient(i, x_new, weight, &mut m);
        }
        m
    };
    let mut small_mean = state.g.clone();
    for i in 0..pool {
        problem.add_component_gradient(i, x_new, weight, &mut small_mean);
        problem.add_component_gradient(i, &state.point, -weight, &mut small_mean);
    }
    let p = params.p;
    let entries: Vec<f64> = big_mean
        .iter()
        .zip(small_mean.iter())
        .zip(full_new.iter())
        .map(|((b, s), f)| p * (b - f) + (1.0 - p) * (s - f))
        .collect();
    Ok(Vector::from_raw(entries))
}
