//! The `verify` suite: every verifier check on a fixed set of seeded
//! instances, optionally with the certified `L` scaled to test that the
//! checks can fail.

use page_core::estimator::EstimatorParams;
use page_core::problems::{
    streaming_view, HeterogeneousQuadratic, NonconvexLogistic, Recertified, SharedCurvatureQuadratic,
};
use page_core::theory::{auto_config, default_probability, default_small_batch, stepsize_max};
use page_core::verifier::{
    audit_descent_lemma, audit_variance_recursion_exact, check_average_smoothness, check_bounded_variance,
    check_descent_along_run, check_jensen_output, check_lyapunov_telescoping, check_phi0_bound,
    check_variance_recursion_online, random_state,
};
use page_core::{CheckReport, FiniteSumProblem, Mode, PageConfig, RandomSource, Vector};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::spec::DynProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Level {
    #[default]
    Quick,
    Full,
}

impl Level {
    pub fn replicates(self) -> usize {
        match self {
            Self::Quick => 10_000,
            Self::Full => 100_000,
        }
    }

    pub fn seeds(self) -> u64 {
        match self {
            Self::Quick => 50,
            Self::Full => 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub level: Level,
    /// Factor applied to every certified `L` (1 leaves them intact).
    pub l_scale: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { level: Level::Quick, l_scale: 1.0, seed: 0 }
    }
}

type Problem = Recertified<DynProblem>;

struct Zoo {
    shared: Problem,
    hetero: Problem,
    small: Problem,
    logistic: Problem,
}

impl Zoo {
    fn new(seed: u64, l_scale: f64) -> Result<Self> {
        let mut rng = RandomSource::new(seed);
        let wrap = |p: DynProblem| Recertified::scale_smoothness(p, l_scale);
        Ok(Self {
            shared: wrap(Box::new(SharedCurvatureQuadratic::generate(&mut rng.split(), 5, 50, 1.0)?)),
            hetero: wrap(Box::new(HeterogeneousQuadratic::generate(&mut rng.split(), 5, 20, 10.0)?)),
            // strongly heterogeneous, so that the L² term of the variance recursion matters
            small: wrap(Box::new(HeterogeneousQuadratic::generate_with(&mut rng.split(), 2, 4, 3.0, 3.0)?)),
            logistic: wrap(Box::new(NonconvexLogistic::synthetic(&mut rng.split(), 5, 40, 0.1, 0.1)?)),
        })
    }

    fn families(&self) -> [(&'static str, &Problem); 3] {
        [("shared_curvature", &self.shared), ("heterogeneous", &self.hetero), ("logistic", &self.logistic)]
    }
}

/// A check that could not be evaluated counts as failed.
fn failed(name: &str, err: impl std::fmt::Display) -> CheckReport {
    CheckReport {
        name: format!("{name} [{err}]"),
        lhs: f64::NAN,
        rhs: f64::NAN,
        margin: f64::NAN,
        passed: false,
        replicates: 0,
        standard_error: None,
        tolerance: 0.0,
    }
}

fn named<E: std::fmt::Display>(name: String, r: std::result::Result<CheckReport, E>) -> CheckReport {
    match r {
        Ok(mut r) => {
            r.name = name;
            r
        }
        Err(e) => failed(&name, e),
    }
}

/// `x* + r u` with `f - f* = gap`, for a quadratic with certified minimizer.
fn gap_point<P: FiniteSumProblem + ?Sized>(p: &P, gap: f64, rng: &mut RandomSource) -> Vector {
    let x_star = p.constants().minimizer.clone().expect("quadratic minimizer");
    let f_star = p.constants().f_star.expect("quadratic minimum");
    let u = Vector::new(rng.normal_vec(p.dim())).expect("finite");
    let u = u.scaled(1.0 / u.norm());
    let curvature = 2.0 * (p.value(&Vector::axpy(1.0, &u, &x_star).expect("finite")) - f_star);
    Vector::axpy((2.0 * gap / curvature).sqrt(), &u, &x_star).expect("finite")
}

type Job<'a> = Box<dyn Fn() -> CheckReport + Send + Sync + 'a>;

/// Runs the suite; reports come back in a fixed order.
pub fn verify_suite(pool: &rayon::ThreadPool, opts: &VerifyOptions) -> Result<Vec<CheckReport>> {
    if !(opts.l_scale > 0.0) || !opts.l_scale.is_finite() {
        return Err(HarnessError::invalid("l-scale must be positive"));
    }
    let zoo = Zoo::new(opts.seed, opts.l_scale)?;
    let reps = opts.level.replicates();
    let seeds: Vec<u64> = (0..opts.level.seeds()).map(|s| s + opts.seed * 1000).collect();
    let base = opts.seed.wrapping_mul(0x9E37_79B9);
    let stream = streaming_view(&zoo.shared)?;
    let stream = &stream;
    let zoo = &zoo;
    let seeds = &seeds;

    let mut jobs: Vec<Job> = Vec::new();
    for (k, (family, p)) in zoo.families().into_iter().enumerate() {
        let k = k as u64;
        jobs.push(Box::new(move || {
            named(format!("descent_lemma/{family}"), audit_descent_lemma(p, 1000, base + k))
        }));
        jobs.push(Box::new(move || {
            named(format!("average_smoothness/{family}"), check_average_smoothness(p, 100, base + 10 + k))
        }));
        jobs.push(Box::new(move || {
            let n = p.sample_pool();
            let prob = 0.3;
            let eta = match stepsize_max(p.constants().smoothness, prob, 2) {
                Ok(eta) => eta,
                Err(e) => return failed(&format!("descent_along_run/{family}"), e),
            };
            let config = PageConfig::new(eta, EstimatorParams::new(n, 2, prob).expect("valid"), 200, Vector::zeros(p.dim()))
                .with_seed(base + 20 + k);
            named(format!("descent_along_run/{family}"), check_descent_along_run(p, &config))
        }));
    }
    jobs.push(Box::new(move || {
        named("bounded_variance/shared_curvature".into(), check_bounded_variance(&zoo.shared, 100, base + 30))
    }));
    for (b_prime, prob) in [(1usize, 0.2), (2, 0.5)] {
        jobs.push(Box::new(move || {
            named(
                format!("variance_recursion_exact/b'={b_prime}"),
                audit_variance_recursion_exact(&zoo.small, prob, b_prime, 100, base + 40 + b_prime as u64),
            )
        }));
    }
    for b in [1usize, 5, 10] {
        jobs.push(Box::new(move || {
            let b_prime = default_small_batch(b);
            let prob = default_probability(b, b_prime);
            let mut rng = RandomSource::new(base + 50 + b as u64);
            let (g, x, x_next) = random_state(stream, &mut rng);
            named(
                format!("variance_recursion_online/b={b}"),
                check_variance_recursion_online(stream, &g, &x, &x_next, prob, b, b_prime, reps, base + 60 + b as u64),
            )
        }));
    }
    jobs.push(Box::new(move || {
        let mut rng = RandomSource::new(base + 70);
        let x0 = gap_point(stream, 1.0, &mut rng);
        let (b, b_prime) = (5, 2);
        let prob = default_probability(b, b_prime);
        let eta = stepsize_max(stream.constants().smoothness, prob, b_prime).unwrap_or(f64::NAN);
        named("phi0_bound/b=5".into(), check_phi0_bound(stream, &x0, b, prob, eta, reps, base + 71))
    }));
    jobs.push(Box::new(move || {
        let mut rng = RandomSource::new(base + 80);
        let x0 = gap_point(&zoo.hetero, 1.0, &mut rng);
        let r = auto_config(&zoo.hetero, x0, 0.2, Mode::Finite)
            .map_err(|e| e.to_string())
            .and_then(|c| check_lyapunov_telescoping(&zoo.hetero, &c, seeds).map_err(|e| e.to_string()));
        named("lyapunov_telescoping/finite".into(), r)
    }));
    jobs.push(Box::new(move || {
        let mut rng = RandomSource::new(base + 81);
        let x0 = gap_point(stream, 1.0, &mut rng);
        let r = auto_config(stream, x0, 0.5, Mode::Online)
            .map_err(|e| e.to_string())
            .and_then(|c| check_lyapunov_telescoping(stream, &c, seeds).map_err(|e| e.to_string()));
        named("lyapunov_telescoping/online".into(), r)
    }));
    jobs.push(Box::new(move || {
        let mut rng = RandomSource::new(base + 82);
        let x0 = gap_point(&zoo.hetero, 1.0, &mut rng);
        let r = auto_config(&zoo.hetero, x0, 0.2, Mode::Finite)
            .map_err(|e| e.to_string())
            .and_then(|c| check_jensen_output(&zoo.hetero, &c.with_diagnostics(0), seeds).map_err(|e| e.to_string()));
        named("jensen_output".into(), r)
    }));

    Ok(pool.install(|| jobs.par_iter().map(|job| job()).collect()))
}
