use page_core::theory::{
    default_probability, default_small_batch, finite_complexity_bound, finite_iterations_bound, grad_complexity,
    iterations_finite, iterations_finite_real, iterations_online_real, online_complexity_bound,
    online_iterations_bound, stepsize_max,
};
use proptest::prelude::*;

const GRID_N: [usize; 8] = [1, 2, 5, 16, 100, 1000, 4097, 10_000];
const GRID_L: [f64; 3] = [0.5, 1.0, 7.0];
const GRID_DELTA: [f64; 3] = [0.01, 1.0, 30.0];
const GRID_EPS: [f64; 3] = [0.01, 0.1, 1.0];

fn grid() -> impl Iterator<Item = (usize, f64, f64, f64)> {
    GRID_N.into_iter().flat_map(|n| {
        GRID_L.into_iter().flat_map(move |l| {
            GRID_DELTA.into_iter().flat_map(move |d| GRID_EPS.into_iter().map(move |e| (n, l, d, e)))
        })
    })
}

fn small_batches(b: usize) -> impl Iterator<Item = usize> {
    let root = default_small_batch(b);
    (1..=root).filter(move |bp| *bp == 1 || *bp == root || bp.is_power_of_two())
}

#[test]
fn finite_sum_formulas_stay_below_simplified_bounds() {
    for (n, l, d, e) in grid() {
        for bp in small_batches(n) {
            let p = default_probability(n, bp);
            let t = iterations_finite_real(l, d, e, p, bp);
            let bound = finite_iterations_bound(l, d, e, n, bp);
            assert!(t <= bound * (1.0 + 1e-12), "T {t} > {bound} at n={n}, b'={bp}");
            if bp == default_small_batch(n) && bp * bp == n {
                let cost = grad_complexity(n, t, p, bp);
                let cbound = finite_complexity_bound(l, d, e, n);
                assert!(cost <= cbound * (1.0 + 1e-12), "#grad {cost} > {cbound} at n={n}");
            }
        }
    }
}

#[test]
fn online_formulas_stay_below_simplified_bounds() {
    for (b, l, d, e) in grid() {
        for bp in small_batches(b) {
            let p = default_probability(b, bp);
            let t = iterations_online_real(l, d, e, p, bp);
            let bound = online_iterations_bound(l, d, e, b, bp);
            assert!(t <= bound * (1.0 + 1e-12), "T {t} > {bound} at b={b}, b'={bp}");
            if bp == default_small_batch(b) && bp * bp == b {
                let cost = grad_complexity(b, t, p, bp);
                let cbound = online_complexity_bound(l, d, e, b);
                assert!(cost <= cbound * (1.0 + 1e-12), "#grad {cost} > {cbound} at b={b}");
            }
        }
    }
}

#[test]
fn iterations_scale_inverse_square_in_epsilon() {
    for (n, l, d, _) in grid() {
        let bp = default_small_batch(n);
        let p = default_probability(n, bp);
        let t1 = iterations_finite_real(l, d, 0.2, p, bp);
        let t2 = iterations_finite_real(l, d, 0.1, p, bp);
        assert!((t2 / t1 - 4.0).abs() < 1e-12);
    }
}

#[test]
fn certain_switch_costs_b_per_iteration() {
    for b in [1usize, 3, 50] {
        for t in [0.0, 1.0, 17.0] {
            assert_eq!(grad_complexity(b, t, 1.0, 1), b as f64 * (t + 1.0));
        }
    }
}

proptest! {
    #[test]
    fn stepsize_nondecreasing(l in 0.01f64..100.0, p in 0.001f64..1.0, dp in 0.0f64..1.0, bp in 1usize..100, dbp in 0usize..100) {
        let p2 = (p + dp).min(1.0);
        prop_assert!(stepsize_max(l, p2, bp).unwrap() >= stepsize_max(l, p, bp).unwrap());
        prop_assert!(stepsize_max(l, p, bp + dbp).unwrap() >= stepsize_max(l, p, bp).unwrap());
    }

    #[test]
    fn iterations_nonincreasing(l in 0.01f64..10.0, d in 0.01f64..10.0, e in 0.05f64..1.0,
                               p in 0.001f64..1.0, dp in 0.0f64..1.0, bp in 1usize..100, dbp in 0usize..100) {
        let p2 = (p + dp).min(1.0);
        prop_assert!(iterations_finite(l, d, e, p2, bp) <= iterations_finite(l, d, e, p, bp));
        prop_assert!(iterations_finite(l, d, e, p, bp + dbp) <= iterations_finite(l, d, e, p, bp));
    }
}
