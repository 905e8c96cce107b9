#![allow(dead_code)]

use page_core::problems::{HeterogeneousQuadratic, NonconvexLogistic, SharedCurvatureQuadratic};
use page_core::{FiniteSumProblem, RandomSource, Vector};

pub fn shared(seed: u64, d: usize, n: usize, spread: f64) -> SharedCurvatureQuadratic {
    SharedCurvatureQuadratic::generate(&mut RandomSource::new(seed), d, n, spread).unwrap()
}

pub fn hetero(seed: u64, d: usize, n: usize, condition: f64) -> HeterogeneousQuadratic {
    HeterogeneousQuadratic::generate(&mut RandomSource::new(seed), d, n, condition).unwrap()
}

pub fn logistic(seed: u64, d: usize, n: usize, lambda: f64) -> NonconvexLogistic {
    NonconvexLogistic::synthetic(&mut RandomSource::new(seed), d, n, lambda, 0.1).unwrap()
}

/// One instance of each family, boxed for uniform iteration.
pub fn zoo() -> Vec<(&'static str, Box<dyn FiniteSumProblem>)> {
    vec![
        ("shared_curvature", Box::new(shared(11, 5, 10, 1.0)) as Box<dyn FiniteSumProblem>),
        ("heterogeneous", Box::new(hetero(12, 5, 10, 10.0))),
        ("logistic", Box::new(logistic(13, 5, 20, 0.1))),
    ]
}

pub fn gaussian(rng: &mut RandomSource, d: usize, scale: f64) -> Vector {
    Vector::new(rng.normal_vec(d).into_iter().map(|v| scale * v).collect()).unwrap()
}

pub fn vec_of(xs: &[f64]) -> Vector {
    Vector::from_slice(xs).unwrap()
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}
