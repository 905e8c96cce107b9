mod common;

use common::*;
use nalgebra::DMatrix;
use page_core::estimator::{EstimatorParams, EstimatorState};
use page_core::linalg::Matrix;
use page_core::problems::{streaming_view, HeterogeneousQuadratic, NonconvexLogistic, SharedCurvatureQuadratic};
use page_core::verifier::{check_average_smoothness, check_bounded_variance};
use page_core::{ComponentCount, FiniteSumProblem, RandomSource, Vector};

fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

fn top_eigenvalue(m: &Matrix) -> f64 {
    to_nalgebra(m).symmetric_eigen().eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
}

fn central_difference<P: FiniteSumProblem + ?Sized>(p: &P, i: usize, x: &Vector, h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let e = Vector::basis(x.len(), j);
            let up = Vector::axpy(h, &e, x).unwrap();
            let down = Vector::axpy(-h, &e, x).unwrap();
            (p.component_value(i, &up) - p.component_value(i, &down)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn component_gradients_match_finite_differences() {
    let mut rng = RandomSource::new(100);
    for (name, p) in zoo() {
        for _ in 0..20 {
            let x = gaussian(&mut rng, p.dim(), 1.0);
            for i in 0..p.sample_pool() {
                let g = p.component_gradient(i, &x);
                let fd = vec_of(&central_difference(&*p, i, &x, 1e-6));
                let rel = fd.dist_sq(&g).unwrap().sqrt() / g.norm();
                assert!(rel < 1e-5, "{name} component {i}: relative error {rel}");
            }
        }
    }
}

#[test]
fn logistic_regularizer_far_from_origin_matches_finite_differences() {
    let p = logistic(5, 3, 4, 50.0);
    let x = vec_of(&[30.0, -45.0, 0.7]);
    for i in 0..4 {
        let g = p.component_gradient(i, &x);
        let fd = vec_of(&central_difference(&p, i, &x, 1e-6));
        assert!(fd.dist_sq(&g).unwrap().sqrt() <= 1e-5 * g.norm());
    }
}

#[test]
fn full_gradient_is_component_average() {
    let mut rng = RandomSource::new(101);
    for (name, p) in zoo() {
        for _ in 0..20 {
            let x = gaussian(&mut rng, p.dim(), 2.0);
            let n = p.sample_pool();
            let mut avg = Vector::zeros(p.dim());
            for i in 0..n {
                avg.add_scaled_assign(1.0 / n as f64, &p.component_gradient(i, &x)).unwrap();
            }
            let full = p.full_gradient(&x);
            assert!(avg.dist_sq(&full).unwrap().sqrt() <= 1e-10 * full.norm().max(1e-300), "{name}");
        }
    }
}

#[test]
fn certified_constants_pass_assumption_checks() {
    for (name, p) in zoo() {
        let r = check_average_smoothness(&*p, 100, 3).unwrap();
        assert!(r.passed, "{name}: {r:?}");
        assert_eq!(r.replicates, 100);
        if p.constants().sigma_sq.is_some() {
            let r = check_bounded_variance(&*p, 100, 4).unwrap();
            assert!(r.passed, "{name}: {r:?}");
        }
    }
}

#[test]
fn hand_example_constants() {
    let p = SharedCurvatureQuadratic::new(Matrix::identity(2), vec![vec_of(&[1.0, 0.0]), vec_of(&[-1.0, 0.0])])
        .unwrap();
    let c = p.constants();
    assert_eq!(c.sigma_sq, Some(1.0));
    assert_eq!(c.f_star, Some(0.0));
    assert!((c.smoothness - 1.0).abs() < 1e-12);
}

#[test]
fn zero_spread_components_equal_full_gradient() {
    let p = shared(3, 4, 6, 0.0);
    assert_eq!(p.constants().sigma_sq, Some(0.0));
    let x = vec_of(&[0.1, -2.0, 3.0, 0.5]);
    let full = p.full_gradient(&x);
    for i in 0..6 {
        assert_eq!(p.component_gradient(i, &x), full);
    }
}

#[test]
fn shared_curvature_smoothness_is_top_eigenvalue() {
    let p = shared(9, 6, 5, 1.0);
    let oracle = top_eigenvalue(p.curvature());
    assert!((p.constants().smoothness - oracle).abs() < 1e-12);
}

#[test]
fn shared_curvature_deviation_is_constant_in_x() {
    let p = shared(9, 4, 5, 2.0);
    let mut rng = RandomSource::new(1);
    for i in 0..5 {
        let expected = p.mean_offset().sub(&p.offsets()[i]).unwrap();
        for _ in 0..10 {
            let x = gaussian(&mut rng, 4, 3.0);
            let dev = p.component_gradient(i, &x).sub(&p.full_gradient(&x)).unwrap();
            assert!(dev.dist_sq(&expected).unwrap().sqrt() < 1e-12);
        }
    }
}

#[test]
fn power_iteration_matches_dense_eigensolver() {
    for seed in 0..10 {
        let p = hetero(seed, 3, 8, 5.0);
        let oracle = top_eigenvalue(&p.gram_matrix()).sqrt();
        assert!((p.constants().smoothness - oracle).abs() < 1e-8, "seed {seed}");
    }
}

#[test]
fn single_component_reduces_to_top_eigenvalue() {
    let p = hetero(4, 4, 1, 8.0);
    let oracle = top_eigenvalue(&p.matrices()[0]);
    assert!((p.constants().smoothness - oracle).abs() < 1e-10);
}

#[test]
fn equal_components_give_top_eigenvalue() {
    let base = hetero(4, 3, 1, 8.0);
    let a = base.matrices()[0].clone();
    let p = HeterogeneousQuadratic::from_components(
        vec![a.clone(), a.clone(), a.clone()],
        vec![vec_of(&[1.0, 0.0, 0.0]), vec_of(&[0.0, 1.0, 0.0]), vec_of(&[0.0, 0.0, 1.0])],
    )
    .unwrap();
    assert!((p.constants().smoothness - top_eigenvalue(&a)).abs() < 1e-10);
}

#[test]
fn certified_minimizers_are_stationary() {
    let problems: Vec<Box<dyn FiniteSumProblem>> =
        vec![Box::new(shared(21, 8, 10, 1.0)), Box::new(hetero(22, 8, 10, 20.0))];
    for p in problems {
        let c = p.constants();
        let x = c.minimizer.as_ref().unwrap();
        assert!(p.full_gradient(x).norm() <= 1e-8);
        assert!((p.value(x) - c.f_star.unwrap()).abs() <= 1e-10 * (1.0 + c.f_star.unwrap().abs()));
    }
}

#[test]
fn logistic_has_no_certified_minimum() {
    let p = logistic(1, 3, 10, 0.1);
    assert_eq!(p.constants().f_star, None);
    assert_eq!(p.constants().f_lower_bound, Some(0.0));
    assert!(matches!(
        streaming_view(&p),
        Err(page_core::ProblemError::MissingVariance)
    ));
    let _ = NonconvexLogistic::new(vec![vec_of(&[1.0])], vec![1.0], 0.0).unwrap();
}

#[test]
fn zero_spread_stream_gradients_equal_full_gradient() {
    let p = shared(5, 3, 7, 0.0);
    let view = streaming_view(&p).unwrap();
    assert_eq!(view.components(), ComponentCount::Streaming);
    let x = vec_of(&[1.0, 2.0, -1.0]);
    let params = EstimatorParams::new(1, 1, 0.5).unwrap();
    let mut rng = RandomSource::new(0);
    for _ in 0..100 {
        let s = EstimatorState::init(&view, &params, x.clone(), &mut rng).unwrap();
        assert_eq!(s.gradient(), &p.full_gradient(&x));
    }
}

#[test]
fn stream_gradient_moments_match_certificate() {
    let p = shared(6, 3, 9, 1.5);
    let view = streaming_view(&p).unwrap();
    let sigma_sq = p.constants().sigma_sq.unwrap();
    let x = vec_of(&[0.3, -0.4, 1.0]);
    let full = p.full_gradient(&x);
    let params = EstimatorParams::new(1, 1, 0.5).unwrap();
    let mut rng = RandomSource::new(77);
    let reps = 100_000;
    let mut sq = Vec::with_capacity(reps);
    let mut coords = vec![Vec::with_capacity(reps); 3];
    for _ in 0..reps {
        let s = EstimatorState::init(&view, &params, x.clone(), &mut rng).unwrap();
        sq.push(s.gradient().dist_sq(&full).unwrap());
        for (c, v) in coords.iter_mut().zip(s.gradient().iter()) {
            c.push(*v);
        }
    }
    let (var, _) = mean_se(&sq);
    assert!((var / sigma_sq - 1.0).abs() < 0.05, "variance {var} vs {sigma_sq}");
    for (j, c) in coords.iter().enumerate() {
        let (m, se) = mean_se(c);
        assert!((m - full[j]).abs() <= 4.0 * se, "coordinate {j}: {m} vs {}", full[j]);
    }
}
