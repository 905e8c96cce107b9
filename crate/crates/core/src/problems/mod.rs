//! Finite-sum and online objectives `f(x) = (1/n) Σ f_i(x)`, together with
//! problem families whose smoothness, variance and optimum are certified
//! without estimation.

mod logistic;
mod quadratic;

pub use logistic::NonconvexLogistic;
pub use quadratic::{HeterogeneousQuadratic, SharedCurvatureQuadratic};

use alloc::boxed::Box;

use thiserror::Error;

use crate::linalg::{LinalgError, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("curvature matrix is degenerate (not positive definite)")]
    Degenerate,
    #[error("averaged linear system is singular or indefinite")]
    SingularAverage,
    #[error("problem has no certified variance bound")]
    MissingVariance,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("inconsistent shapes: {0}")]
    Shape(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Number of components: finite `n`, or an unbounded stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentCount {
    Finite(usize),
    Streaming,
}

impl ComponentCount {
    pub fn finite(self) -> Option<usize> {
        match self {
            ComponentCount::Finite(n) => Some(n),
            ComponentCount::Streaming => None,
        }
    }

    /// The indicator `1{b < n}`; always true for a stream.
    pub fn exceeds(self, b: usize) -> bool {
        match self {
            ComponentCount::Finite(n) => b < n,
            ComponentCount::Streaming => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certification {
    /// Constants are exact closed forms.
    Analytic,
    /// `smoothness` is a closed-form upper bound, not the tight constant.
    AnalyticUpperBound,
    /// Constants come from a numerical routine (power iteration, linear solve).
    ComputedByOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    /// Average-smoothness constant `L`.
    pub smoothness: f64,
    /// Single-sample variance bound `σ²`.
    pub sigma_sq: Option<f64>,
    pub f_star: Option<f64>,
    /// Certified lower bound on `f*`, used when `f*` itself is unknown.
    pub f_lower_bound: Option<f64>,
    pub minimizer: Option<Vector>,
    pub certification: Certification,
}

impl ProblemConstants {
    /// `Δ₀ = f(x⁰) - f*` given `f(x⁰)`, when `f*` is certified.
    pub fn initial_gap(&self, f_x0: f64) -> Option<f64> {
        self.f_star.map(|fs| f_x0 - fs)
    }

    /// `f(x⁰) - f*` if known, else `f(x⁰) - lower bound`, an upper bound on `Δ₀`.
    pub fn initial_gap_bound(&self, f_x0: f64) -> Option<f64> {
        self.f_star.or(self.f_lower_bound).map(|fs| f_x0 - fs)
    }
}

/// Oracle bundle for `min f(x) = (1/n) Σ f_i(x)`.
///
/// Component indices are sample identities in `[0, sample_pool())`. For
/// finite problems the pool is `[n]`; a stream draws identities i.i.d. from
/// its generating pool, so the same identity can be evaluated at two points.
/// Oracles panic on dimension mismatch.
pub trait FiniteSumProblem {
    fn dim(&self) -> usize;

    fn components(&self) -> ComponentCount;

    fn sample_pool(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    /// Exact `∇f(x)`. On streaming problems this is for diagnostics only.
    fn full_gradient(&self, x: &Vector) -> Vector;

    fn component_value(&self, i: usize, x: &Vector) -> f64;

    fn component_gradient(&self, i: usize, x: &Vector) -> Vector;

    /// `out += alpha * ∇f_i(x)`.
    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        let g = self.component_gradient(i, x);
        for (o, gi) in out.as_mut_slice().iter_mut().zip(g.iter()) {
            *o += alpha * gi;
        }
    }

    /// `(1/|I|) Σ_{i∈I} ∇f_i(x)` over the multiset `indices`.
    fn minibatch_gradient(&self, indices: &[usize], x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        let weight = 1.0 / indices.len() as f64;
        for &i in indices {
            self.add_component_gradient(i, x, weight, &mut g);
        }
        g
    }

    fn constants(&self) -> &ProblemConstants;
}

impl<P: FiniteSumProblem + ?Sized> FiniteSumProblem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn components(&self) -> ComponentCount {
        (**self).components()
    }
    fn sample_pool(&self) -> usize {
        (**self).sample_pool()
    }
    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }
    fn full_gradient(&self, x: &Vector) -> Vector {
        (**self).full_gradient(x)
    }
    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        (**self).component_value(i, x)
    }
    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        (**self).component_gradient(i, x)
    }
    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        (**self).add_component_gradient(i, x, alpha, out)
    }
    fn minibatch_gradient(&self, indices: &[usize], x: &Vector) -> Vector {
        (**self).minibatch_gradient(indices, x)
    }
    fn constants(&self) -> &ProblemConstants {
        (**self).constants()
    }
}

impl<P: FiniteSumProblem + ?Sized> FiniteSumProblem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn components(&self) -> ComponentCount {
        (**self).components()
    }
    fn sample_pool(&self) -> usize {
        (**self).sample_pool()
    }
    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }
    fn full_gradient(&self, x: &Vector) -> Vector {
        (**self).full_gradient(x)
    }
    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        (**self).component_value(i, x)
    }
    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        (**self).component_gradient(i, x)
    }
    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        (**self).add_component_gradient(i, x, alpha, out)
    }
    fn minibatch_gradient(&self, indices: &[usize], x: &Vector) -> Vector {
        (**self).minibatch_gradient(indices, x)
    }
    fn constants(&self) -> &ProblemConstants {
        (**self).constants()
    }
}

/// Online view of a problem: reports an unbounded component count, so every
/// minibatch is sampled i.i.d. and `1{b < n}` always holds.
///
/// Sample identities are drawn by the caller's random source, which keeps
/// the view immutable and lets the small estimator branch evaluate one
/// sample at both `x_{t+1}` and `x_t`.
#[derive(Debug, Clone)]
pub struct StreamingView<P> {
    base: P,
}

pub fn streaming_view<P: FiniteSumProblem>(base: P) -> Result<StreamingView<P>, ProblemError> {
    if base.constants().sigma_sq.is_none() {
        return Err(ProblemError::MissingVariance);
    }
    Ok(StreamingView { base })
}

impl<P> StreamingView<P> {
    pub fn base(&self) -> &P {
        &self.base
    }
}

impl<P: FiniteSumProblem> FiniteSumProblem for StreamingView<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn components(&self) -> ComponentCount {
        ComponentCount::Streaming
    }
    fn sample_pool(&self) -> usize {
        self.base.sample_pool()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.base.value(x)
    }
    fn full_gradient(&self, x: &Vector) -> Vector {
        self.base.full_gradient(x)
    }
    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        self.base.component_value(i, x)
    }
    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        self.base.component_gradient(i, x)
    }
    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        self.base.add_component_gradient(i, x, alpha, out)
    }
    fn minibatch_gradient(&self, indices: &[usize], x: &Vector) -> Vector {
        self.base.minibatch_gradient(indices, x)
    }
    fn constants(&self) -> &ProblemConstants {
        self.base.constants()
    }
}

/// A problem with its certified constants replaced. Used to show that the
/// verifier notices a wrong certificate.
#[derive(Debug, Clone)]
pub struct Recertified<P> {
    base: P,
    constants: ProblemConstants,
}

impl<P: FiniteSumProblem> Recertified<P> {
    pub fn new(base: P, constants: ProblemConstants) -> Self {
        Self { base, constants }
    }

    /// Same problem with `L` multiplied by `factor`.
    pub fn scale_smoothness(base: P, factor: f64) -> Self {
        let mut constants = base.constants().clone();
        constants.smoothness *= factor;
        Self { base, constants }
    }
}

impl<P: FiniteSumProblem> FiniteSumProblem for Recertified<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn components(&self) -> ComponentCount {
        self.base.components()
    }
    fn sample_pool(&self) -> usize {
        self.base.sample_pool()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.base.value(x)
    }
    fn full_gradient(&self, x: &Vector) -> Vector {
        self.base.full_gradient(x)
    }
    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        self.base.component_value(i, x)
    }
    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        self.base.component_gradient(i, x)
    }
    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        self.base.add_component_gradient(i, x, alpha, out)
    }
    fn minibatch_gradient(&self, indices: &[usize], x: &Vector) -> Vector {
        self.base.minibatch_gradient(indices, x)
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
}
