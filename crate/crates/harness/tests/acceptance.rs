//! Acceptance criteria, one line per criterion. Runs as a plain binary so
//! the lines are printed even when every criterion passes.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use page_core::estimator::EstimatorParams;
use page_core::problems::{streaming_view, HeterogeneousQuadratic, NonconvexLogistic, SharedCurvatureQuadratic};
use page_core::theory::{
    default_probability, default_small_batch, grad_complexity, iterations_finite, iterations_online, online_minibatch,
    stepsize_max,
};
use page_core::verifier::{
    audit_descent_lemma, audit_variance_recursion_exact, check_lyapunov_telescoping,
    check_variance_recursion_online, random_state, CheckReport,
};
use page_core::{auto_config, run_gd, run_page, run_sgd, FiniteSumProblem, Mode, PageConfig, RandomSource, Vector};
use page_harness::sweep::{sweep_n, SweepOptions};
use page_harness::verify::{verify_suite, Level, VerifyOptions};

type Outcome = Result<String, String>;

fn pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().build().expect("thread pool")
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    if took <= limit {
        Ok(format!("{detail}; {:.2}s", took.as_secs_f64()))
    } else {
        Err(format!("{detail}; took {:.2}s, limit {}s", took.as_secs_f64(), limit.as_secs()))
    }
}

fn require(report: &CheckReport) -> Result<(), String> {
    if report.passed {
        Ok(())
    } else {
        Err(format!("{} failed: lhs {} rhs {} margin {}", report.name, report.lhs, report.rhs, report.margin))
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn zoo(seed: u64) -> Vec<(&'static str, Box<dyn FiniteSumProblem>)> {
    let mut rng = RandomSource::new(seed);
    vec![
        ("shared_curvature", Box::new(SharedCurvatureQuadratic::generate(&mut rng.split(), 5, 50, 1.0).unwrap())),
        ("heterogeneous", Box::new(HeterogeneousQuadratic::generate(&mut rng.split(), 5, 20, 10.0).unwrap())),
        ("logistic", Box::new(NonconvexLogistic::synthetic(&mut rng.split(), 5, 40, 0.1, 0.1).unwrap())),
    ]
}

fn finite_instance() -> (HeterogeneousQuadratic, Vector) {
    let mut rng = RandomSource::new(4);
    let p = HeterogeneousQuadratic::generate(&mut rng, 10, 100, 10.0).unwrap();
    let x0 = p.point_with_gap(1.0, &mut rng).unwrap();
    (p, x0)
}

fn online_instance() -> (page_core::problems::StreamingView<SharedCurvatureQuadratic>, Vector) {
    let mut rng = RandomSource::new(5);
    let base = SharedCurvatureQuadratic::generate(&mut rng, 5, 200, 1.0).unwrap();
    let x0 = base.point_with_gap(1.0, &mut rng).unwrap();
    (streaming_view(base).unwrap(), x0)
}

fn grad_norm<P: FiniteSumProblem + ?Sized>(p: &P, x: &Vector) -> f64 {
    p.full_gradient(x).norm()
}

fn descent_audit() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    for (k, (name, p)) in zoo(1).into_iter().enumerate() {
        let r = audit_descent_lemma(&*p, 1000, 10 + k as u64).map_err(|e| format!("{name}: {e}"))?;
        require(&r)?;
        worst = worst.min(r.margin);
    }
    within(start, Duration::from_secs(10), format!("3 families x 1000 draws, worst margin {worst:.3e}"))
}

fn exact_variance_recursion() -> Outcome {
    let start = Instant::now();
    let p = HeterogeneousQuadratic::generate(&mut RandomSource::new(2), 2, 4, 10.0).unwrap();
    let prob = default_probability(4, 1);
    let r = audit_variance_recursion_exact(&p, prob, 1, 100, 20).map_err(|e| e.to_string())?;
    if r.margin < -1e-10 {
        return Err(format!("worst margin {}", r.margin));
    }
    require(&r)?;
    within(start, Duration::from_secs(5), format!("100 states, worst margin {:.3e}", r.margin))
}

fn online_variance_recursion() -> Outcome {
    let start = Instant::now();
    let (stream, _) = online_instance();
    let mut details = Vec::new();
    for b in [1usize, 5, 10] {
        let b_prime = default_small_batch(b);
        let prob = default_probability(b, b_prime);
        let (g, x, x_next) = random_state(&stream, &mut RandomSource::new(30 + b as u64));
        let r = check_variance_recursion_online(&stream, &g, &x, &x_next, prob, b, b_prime, 100_000, 40 + b as u64)
            .map_err(|e| e.to_string())?;
        require(&r)?;
        details.push(format!("b={b}: {:.3}/{:.3}", r.lhs, r.rhs));
    }
    within(start, Duration::from_secs(60), details.join(", "))
}

fn end_to_end<P: FiniteSumProblem + Sync + ?Sized>(p: &P, config: &PageConfig, seeds: u64) -> (f64, Vec<page_core::RunResult>) {
    use rayon::prelude::*;
    let runs: Vec<_> = pool().install(|| {
        (0..seeds).into_par_iter().map(|s| run_page(p, &config.clone().with_seed(s)).unwrap()).collect()
    });
    let norms: Vec<f64> = runs.iter().map(|r| grad_norm(p, &r.x_hat)).collect();
    (norms.iter().sum::<f64>() / norms.len() as f64, runs)
}

fn finite_config() -> Result<(HeterogeneousQuadratic, PageConfig), String> {
    let (p, x0) = finite_instance();
    let config = auto_config(&p, x0.clone(), 0.1, Mode::Finite).map_err(|e| e.to_string())?.with_diagnostics(0);
    let l = p.constants().smoothness;
    let delta0 = p.value(&x0) - p.constants().f_star.unwrap();
    let expected_p = 10.0 / 110.0;
    let params = config.params;
    if (params.b, params.b_prime) != (100, 10) || (params.p - expected_p).abs() > 1e-15 {
        return Err(format!("auto_config chose b={} b'={} p={}", params.b, params.b_prime, params.p));
    }
    if config.eta != stepsize_max(l, params.p, 10).unwrap()
        || config.iters as u64 != iterations_finite(l, delta0, 0.1, params.p, 10)
    {
        return Err("auto_config stepsize or T differs from the theory".into());
    }
    Ok((p, config))
}

fn finite_end_to_end() -> Outcome {
    let start = Instant::now();
    let (p, config) = finite_config()?;
    let (mean, _) = end_to_end(&p, &config, 50);
    if mean > 0.1 {
        return Err(format!("mean grad norm {mean} > 0.1"));
    }
    within(start, Duration::from_secs(120), format!("T={}, mean grad norm {mean:.4} <= 0.1", config.iters))
}

fn online_config() -> Result<(page_core::problems::StreamingView<SharedCurvatureQuadratic>, PageConfig), String> {
    let (stream, x0) = online_instance();
    let config = auto_config(&stream, x0.clone(), 0.2, Mode::Online).map_err(|e| e.to_string())?.with_diagnostics(0);
    let c = stream.constants();
    let b = online_minibatch(c.sigma_sq.unwrap(), 0.2, stream.components());
    let delta0 = stream.value(&x0) - c.f_star.unwrap();
    let params = config.params;
    if params.b != b || config.iters as u64 != iterations_online(c.smoothness, delta0, 0.2, params.p, params.b_prime) {
        return Err(format!("auto_config chose b={} T={}", params.b, config.iters));
    }
    Ok((stream, config))
}

fn online_end_to_end() -> Outcome {
    let start = Instant::now();
    let (stream, config) = online_config()?;
    let (mean, _) = end_to_end(&stream, &config, 50);
    if mean > 0.2 {
        return Err(format!("mean grad norm {mean} > 0.2"));
    }
    within(
        start,
        Duration::from_secs(120),
        format!("b={} T={}, mean grad norm {mean:.4} <= 0.2", config.params.b, config.iters),
    )
}

fn accounting() -> Outcome {
    let mut details = Vec::new();
    let (fp, fc) = finite_config()?;
    let (sp, sc) = online_config()?;
    let cases: [(&str, &dyn Fn() -> Vec<page_core::RunResult>, &PageConfig); 2] =
        [("finite", &|| end_to_end(&fp, &fc, 50).1, &fc), ("online", &|| end_to_end(&sp, &sc, 50).1, &sc)];
    for (name, runs, config) in cases {
        let runs = runs();
        let EstimatorParams { b, b_prime, p, .. } = config.params;
        for r in &runs {
            let expected = b as u64 + r.big_steps * b as u64 + r.small_steps * b_prime as u64;
            if r.paper_calls != expected || r.big_steps + r.small_steps != config.iters as u64 {
                return Err(format!("{name}: paper_calls {} != {expected}", r.paper_calls));
            }
        }
        let calls: Vec<f64> = runs.iter().map(|r| r.paper_calls as f64).collect();
        let (mean, se) = mean_se(&calls);
        let theory = grad_complexity(b, config.iters as f64, p, b_prime);
        if (mean - theory).abs() > 3.0 * se {
            return Err(format!("{name}: mean {mean} vs theory {theory}, se {se}"));
        }
        details.push(format!("{name} mean {mean:.1} vs {theory:.1} (se {se:.1})"));
    }
    Ok(details.join(", "))
}

fn sqrt_n_scaling() -> Outcome {
    let start = Instant::now();
    let opts = SweepOptions::default();
    let out = sweep_n(&pool(), &opts).map_err(|e| e.to_string())?;
    for r in &out.rows {
        if r.b_prime != (r.n as f64).sqrt().floor() as usize {
            return Err(format!("n={} used b'={}", r.n, r.b_prime));
        }
        if r.z_score().is_some_and(|z| z.abs() > 3.0) {
            return Err(format!("n={}: mean cost {} vs theory {} (se {})", r.n, r.mean_cost, r.theory_cost, r.se_cost));
        }
    }
    let slope = out.slope.ok_or("slope undefined")?;
    if !(0.35..=0.65).contains(&slope) {
        return Err(format!("slope {slope}"));
    }
    within(start, Duration::from_secs(300), format!("n in {:?}, slope {slope:.3}", opts.n_values))
}

fn reductions() -> Outcome {
    let (p, x0) = finite_instance();
    let l = p.constants().smoothness;
    let n = 100;
    let page = run_page(&p, &PageConfig::new(1.0 / l, EstimatorParams::new(n, 1, 1.0).unwrap(), 200, x0.clone())
        .with_seed(9)
        .keeping_iterates())
    .map_err(|e| e.to_string())?;
    let gd = run_gd(&p, 1.0 / l, 200, x0.clone(), 9).map_err(|e| e.to_string())?;
    if page.iterates != gd.iterates || page.x_hat != gd.x_hat || page.chosen_index != gd.chosen_index {
        return Err("PAGE(p=1, b=n) differs from GD".into());
    }
    let mut rng = RandomSource::new(11);
    let flat = SharedCurvatureQuadratic::generate(&mut rng, 5, 30, 0.0).unwrap();
    let x0 = Vector::new(rng.normal_vec(5)).unwrap();
    let eta = 1.0 / flat.constants().smoothness;
    let gd = run_gd(&flat, eta, 100, x0.clone(), 3).map_err(|e| e.to_string())?;
    for b in [1, 7, 30] {
        let sgd = run_sgd(&flat, eta, b, 100, x0.clone(), 3).map_err(|e| e.to_string())?;
        if sgd.iterates != gd.iterates || sgd.x_hat != gd.x_hat {
            return Err(format!("spread=0 SGD with b={b} differs from GD"));
        }
    }
    Ok("PAGE(p=1,b=n) == GD over 201 iterates; spread=0 SGD == GD for b in {1,7,30}".into())
}

fn lyapunov() -> Outcome {
    let seeds: Vec<u64> = (0..100).collect();
    let (fp, fc) = finite_config()?;
    let finite = check_lyapunov_telescoping(&fp, &fc.with_diagnostics(1), &seeds).map_err(|e| e.to_string())?;
    require(&finite)?;
    let (sp, sc) = online_config()?;
    let online = check_lyapunov_telescoping(&sp, &sc.with_diagnostics(1), &seeds).map_err(|e| e.to_string())?;
    require(&online)?;
    if online.name != "lyapunov_telescoping_online" {
        return Err(format!("online check ran as {}", online.name));
    }
    Ok(format!(
        "E[phi_T] vs bound: finite {:.3e} <= {:.3e}, online {:.3e} <= {:.3e}",
        finite.lhs, finite.rhs, online.lhs, online.rhs
    ))
}

fn finite_differences() -> Outcome {
    let mut rng = RandomSource::new(12);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (name, p) in zoo(1) {
        let d = p.dim();
        for _ in 0..20 {
            let x = Vector::new(rng.normal_vec(d)).unwrap();
            for i in 0..p.sample_pool() {
                let g = p.component_gradient(i, &x);
                let fd: Vec<f64> = (0..d)
                    .map(|j| {
                        let e = Vector::basis(d, j);
                        let up = p.component_value(i, &Vector::axpy(h, &e, &x).unwrap());
                        let down = p.component_value(i, &Vector::axpy(-h, &e, &x).unwrap());
                        (up - down) / (2.0 * h)
                    })
                    .collect();
                let err = fd.iter().zip(g.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let rel = err / g.norm();
                if !(rel < 1e-5) {
                    return Err(format!("{name} component {i}: relative error {rel}"));
                }
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!("every component at 20 points, worst relative error {worst:.2e}"))
}

fn mutation() -> Outcome {
    let pool = pool();
    let intact = verify_suite(&pool, &VerifyOptions { level: Level::Quick, l_scale: 1.0, seed: 0 })
        .map_err(|e| e.to_string())?;
    if let Some(r) = intact.iter().find(|r| !r.passed) {
        return Err(format!("{} fails with the certified L", r.name));
    }
    let halved = verify_suite(&pool, &VerifyOptions { level: Level::Quick, l_scale: 0.5, seed: 0 })
        .map_err(|e| e.to_string())?;
    let failed: Vec<&str> = halved.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        return Err("every check still passes with L/2".into());
    }
    Ok(format!("{} of {} checks fail with L/2: {}", failed.len(), halved.len(), failed.join(", ")))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("descent lemma audit", descent_audit),
        ("exact variance recursion", exact_variance_recursion),
        ("online variance recursion", online_variance_recursion),
        ("finite-sum end to end", finite_end_to_end),
        ("online end to end", online_end_to_end),
        ("oracle accounting", accounting),
        ("sqrt(n) scaling", sqrt_n_scaling),
        ("reductions", reductions),
        ("lyapunov telescoping", lyapunov),
        ("gradient correctness", finite_differences),
        ("mutation sensitivity", mutation),
    ];
    let mut failures = 0;
    for (k, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
