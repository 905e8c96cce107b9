use alloc::vec;
use alloc::vec::Vec;

use super::{Certification, ComponentCount, FiniteSumProblem, ProblemConstants, ProblemError};
use crate::linalg::{dot_slices, Vector};
use crate::rng::RandomSource;

/// `log(1 + exp(-z))` without overflow.
fn softplus_neg(z: f64) -> f64 {
    if z > 0.0 {
        libm::log1p(libm::exp(-z))
    } else {
        -z + libm::log1p(libm::exp(z))
    }
}

/// `1 / (1 + exp(-z))` without overflow.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Logistic loss with the nonconvex regularizer `λ Σ_j x_j² / (1 + x_j²)`:
///
/// `f_i(x) = log(1 + exp(-y_i a_iᵀx)) + λ Σ_j x_j² / (1 + x_j²)`.
///
/// The Hessian of `f_i` is bounded by `‖a_i‖²/4 + 2λ` in operator norm (the
/// regularizer's second derivative peaks at 2 at the origin), giving the
/// certified bound `L = sqrt((1/n) Σ (‖a_i‖²/4 + 2λ)²)`. `f*` is unknown;
/// `f ≥ 0` serves as the certified lower bound.
#[derive(Debug, Clone)]
pub struct NonconvexLogistic {
    features: Vec<Vector>,
    labels: Vec<f64>,
    lambda: f64,
    constants: ProblemConstants,
}

impl NonconvexLogistic {
    pub fn new(features: Vec<Vector>, labels: Vec<f64>, lambda: f64) -> Result<Self, ProblemError> {
        if features.is_empty() {
            return Err(ProblemError::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(ProblemError::Shape("feature rows and labels differ in count"));
        }
        let dim = features[0].len();
        if dim == 0 || features.iter().any(|a| a.len() != dim) {
            return Err(ProblemError::Shape("feature rows must share a nonzero length"));
        }
        if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
            return Err(ProblemError::InvalidParameter("labels must be +1 or -1"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(ProblemError::InvalidParameter("lambda must be finite and nonnegative"));
        }
        let n = features.len() as f64;
        let mean_sq = features
            .iter()
            .map(|a| {
                let li = a.norm_sq() / 4.0 + 2.0 * lambda;
                li * li
            })
            .sum::<f64>()
            / n;
        let constants = ProblemConstants {
            smoothness: libm::sqrt(mean_sq),
            sigma_sq: None,
            f_star: None,
            f_lower_bound: Some(0.0),
            minimizer: None,
            certification: Certification::AnalyticUpperBound,
        };
        Ok(Self { features, labels, lambda, constants })
    }

    /// Gaussian features, labels `sign(a_iᵀw)` for a planted Gaussian `w`,
    /// each flipped with probability `flip`.
    pub fn synthetic(
        rng: &mut RandomSource,
        dim: usize,
        n: usize,
        lambda: f64,
        flip: f64,
    ) -> Result<Self, ProblemError> {
        if dim == 0 || n == 0 {
            return Err(ProblemError::EmptyDataset);
        }
        if !(0.0..=1.0).contains(&flip) {
            return Err(ProblemError::InvalidParameter("flip probability must lie in [0, 1]"));
        }
        let planted = rng.normal_vec(dim);
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let a = rng.normal_vec(dim);
            let mut y = if dot_slices(&a, &planted) >= 0.0 { 1.0 } else { -1.0 };
            if rng.uniform() < flip {
                y = -y;
            }
            features.push(Vector::new(a)?);
            labels.push(y);
        }
        Self::new(features, labels, lambda)
    }

    pub fn features(&self) -> &[Vector] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn regularizer(&self, x: &Vector) -> f64 {
        self.lambda * x.iter().map(|xj| xj * xj / (1.0 + xj * xj)).sum::<f64>()
    }

    fn add_regularizer_gradient(&self, x: &Vector, alpha: f64, out: &mut [f64]) {
        for (o, xj) in out.iter_mut().zip(x.iter()) {
            let s = 1.0 + xj * xj;
            *o += alpha * self.lambda * 2.0 * xj / (s * s);
        }
    }

    fn add_loss_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut [f64]) {
        let a = &self.features[i];
        let y = self.labels[i];
        let margin = y * dot_slices(a.as_slice(), x.as_slice());
        let coef = -y * sigmoid(-margin);
        for (o, aj) in out.iter_mut().zip(a.iter()) {
            *o += alpha * coef * aj;
        }
    }
}

impl FiniteSumProblem for NonconvexLogistic {
    fn dim(&self) -> usize {
        self.features[0].len()
    }

    fn components(&self) -> ComponentCount {
        ComponentCount::Finite(self.features.len())
    }

    fn sample_pool(&self) -> usize {
        self.features.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let n = self.features.len() as f64;
        let loss: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(a, y)| softplus_neg(y * dot_slices(a.as_slice(), x.as_slice())))
            .sum();
        loss / n + self.regularizer(x)
    }

    fn full_gradient(&self, x: &Vector) -> Vector {
        let n = self.features.len();
        let mut out = vec![0.0; self.dim()];
        for i in 0..n {
            self.add_loss_gradient(i, x, 1.0 / n as f64, &mut out);
        }
        self.add_regularizer_gradient(x, 1.0, &mut out);
        Vector::from_raw(out)
    }

    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        let margin = self.labels[i] * dot_slices(self.features[i].as_slice(), x.as_slice());
        softplus_neg(margin) + self.regularizer(x)
    }

    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        let mut out = vec![0.0; self.dim()];
        self.add_loss_gradient(i, x, 1.0, &mut out);
        self.add_regularizer_gradient(x, 1.0, &mut out);
        Vector::from_raw(out)
    }

    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        self.add_loss_gradient(i, x, alpha, out.as_mut_slice());
        self.add_regularizer_gradient(x, alpha, out.as_mut_slice());
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
}
