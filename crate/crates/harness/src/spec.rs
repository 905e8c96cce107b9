//! Experiment manifests: a JSON file mirroring [`ExperimentSpec`], with CLI
//! flags layered on top.

use std::path::{Path, PathBuf};

use page_core::problems::{
    streaming_view, HeterogeneousQuadratic, NonconvexLogistic, SharedCurvatureQuadratic,
};
use page_core::{FiniteSumProblem, Mode, RandomSource, Vector};
use serde::{Deserialize, Serialize};

use crate::dataset::load_logistic;
use crate::error::{HarnessError, Result};

pub type DynProblem = Box<dyn FiniteSumProblem + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    SharedCurvatureQuadratic {
        dim: usize,
        n: usize,
        #[serde(default = "one")]
        spread: f64,
        #[serde(default)]
        seed: u64,
    },
    HeterogeneousQuadratic {
        dim: usize,
        n: usize,
        #[serde(default = "ten")]
        condition: f64,
        #[serde(default = "one")]
        heterogeneity: f64,
        /// Rescale so that the certified `L` is 1.
        #[serde(default)]
        unit_smoothness: bool,
        #[serde(default)]
        seed: u64,
    },
    Logistic {
        dim: usize,
        n: usize,
        #[serde(default = "tenth")]
        lambda: f64,
        #[serde(default = "tenth")]
        flip: f64,
        #[serde(default)]
        seed: u64,
    },
    LogisticCsv {
        path: PathBuf,
        #[serde(default = "tenth")]
        lambda: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn tenth() -> f64 {
    0.1
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self::HeterogeneousQuadratic {
            dim: 10,
            n: 100,
            condition: 10.0,
            heterogeneity: 1.0,
            unit_smoothness: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Page,
    Sgd,
    Gd,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Page => "page",
            Self::Sgd => "sgd",
            Self::Gd => "gd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    Finite,
    Online,
}

impl From<ModeSpec> for Mode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::Finite => Mode::Finite,
            ModeSpec::Online => Mode::Online,
        }
    }
}

/// Starting point. `Auto` places `x⁰` at gap 1 above `f*` when the
/// minimizer is certified and at the origin otherwise.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Auto,
    Zeros,
    Gap {
        gap: f64,
        #[serde(default)]
        seed: u64,
    },
    Point {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    pub mode: ModeSpec,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub p: Option<f64>,
    pub b: Option<usize>,
    pub b_prime: Option<usize>,
    pub iters: Option<usize>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub diagnostics_interval: usize,
    pub x0: InitSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            algorithm: Algorithm::Page,
            mode: ModeSpec::Finite,
            epsilon: 0.1,
            eta: None,
            p: None,
            b: None,
            b_prime: None,
            iters: None,
            seeds: vec![0],
            output_dir: PathBuf::from("page-out"),
            diagnostics_interval: 1,
            x0: InitSpec::Auto,
        }
    }
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Config { path: path.into(), source })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::invalid("seeds must not be empty"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(HarnessError::invalid("epsilon must be positive"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(HarnessError::invalid("eta must be positive"));
            }
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(HarnessError::invalid("p must lie in (0, 1]"));
            }
        }
        if self.iters == Some(0) {
            return Err(HarnessError::invalid("iters must be at least 1"));
        }
        if self.algorithm == Algorithm::Gd && self.mode == ModeSpec::Online {
            return Err(HarnessError::invalid("gd needs full gradients and cannot run online"));
        }
        Ok(())
    }
}

/// A built problem together with its starting point.
pub struct Instance {
    pub problem: DynProblem,
    pub x0: Vector,
}

enum Built {
    Shared(SharedCurvatureQuadratic),
    Hetero(HeterogeneousQuadratic),
    Logistic(NonconvexLogistic),
}

impl Built {
    fn point_with_gap(&self, gap: f64, rng: &mut RandomSource) -> Result<Vector> {
        match self {
            Self::Shared(p) => Ok(p.point_with_gap(gap, rng)?),
            Self::Hetero(p) => Ok(p.point_with_gap(gap, rng)?),
            Self::Logistic(_) => Err(HarnessError::invalid("logistic problems have no certified minimizer")),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Shared(p) => p.dim(),
            Self::Hetero(p) => p.dim(),
            Self::Logistic(p) => p.dim(),
        }
    }

    fn boxed(self) -> DynProblem {
        match self {
            Self::Shared(p) => Box::new(p),
            Self::Hetero(p) => Box::new(p),
            Self::Logistic(p) => Box::new(p),
        }
    }
}

fn build_problem(spec: &ProblemSpec) -> Result<Built> {
    Ok(match spec {
        ProblemSpec::SharedCurvatureQuadratic { dim, n, spread, seed } => {
            Built::Shared(SharedCurvatureQuadratic::generate(&mut RandomSource::new(*seed), *dim, *n, *spread)?)
        }
        ProblemSpec::HeterogeneousQuadratic { dim, n, condition, heterogeneity, unit_smoothness, seed } => {
            let p = HeterogeneousQuadratic::generate_with(
                &mut RandomSource::new(*seed),
                *dim,
                *n,
                *condition,
                *heterogeneity,
            )?;
            Built::Hetero(if *unit_smoothness { p.with_unit_smoothness()? } else { p })
        }
        ProblemSpec::Logistic { dim, n, lambda, flip, seed } => {
            Built::Logistic(NonconvexLogistic::synthetic(&mut RandomSource::new(*seed), *dim, *n, *lambda, *flip)?)
        }
        ProblemSpec::LogisticCsv { path, lambda } => Built::Logistic(load_logistic(path, *lambda)?),
    })
}

/// Builds the problem (as a stream in online mode) and its starting point.
pub fn build_instance(spec: &ExperimentSpec) -> Result<Instance> {
    let built = build_problem(&spec.problem)?;
    let d = built.dim();
    let x0 = match &spec.x0 {
        InitSpec::Auto => {
            if matches!(built, Built::Logistic(_)) {
                Vector::zeros(d)
            } else {
                built.point_with_gap(1.0, &mut RandomSource::new(0))?
            }
        }
        InitSpec::Zeros => Vector::zeros(d),
        InitSpec::Gap { gap, seed } => built.point_with_gap(*gap, &mut RandomSource::new(*seed))?,
        InitSpec::Point { values } => {
            if values.len() != d {
                return Err(HarnessError::invalid(format!("x0 has {} entries, problem dimension is {d}", values.len())));
            }
            Vector::from_slice(values).map_err(|e| HarnessError::invalid(format!("x0: {e}")))?
        }
    };
    let problem = match spec.mode {
        ModeSpec::Finite => built.boxed(),
        ModeSpec::Online => Box::new(streaming_view(built.boxed())?),
    };
    Ok(Instance { problem, x0 })
}

/// Seed lists: `0..50`, `3,5,9`, or a single integer.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let hi: u64 = hi.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        if hi <= lo {
            return Err("empty seed range".into());
        }
        return Ok((lo..hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| format!("bad seed {s:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_manifest() {
        let spec: ExperimentSpec = serde_json::from_str(
            r#"{"problem": {"family": "shared_curvature_quadratic", "dim": 3, "n": 8},
                "algorithm": "gd", "seeds": [1, 2], "iters": 5}"#,
        )
        .unwrap();
        assert_eq!(spec.algorithm, Algorithm::Gd);
        assert_eq!(spec.iters, Some(5));
        assert_eq!(spec.epsilon, 0.1);
        assert!(matches!(spec.problem, ProblemSpec::SharedCurvatureQuadratic { spread, .. } if spread == 1.0));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"bogus": 1}"#).is_err());
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"problem": {"family": "nope"}}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let spec = ExperimentSpec { x0: InitSpec::Gap { gap: 2.0, seed: 4 }, ..Default::default() };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 7").unwrap(), vec![4, 7]);
        assert_eq!(parse_seeds("9").unwrap(), vec![9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn builds_instances() {
        let spec = ExperimentSpec::default();
        let inst = build_instance(&spec).unwrap();
        let c = inst.problem.constants();
        assert!((inst.problem.value(&inst.x0) - c.f_star.unwrap() - 1.0).abs() < 1e-9);

        let online = ExperimentSpec {
            problem: ProblemSpec::SharedCurvatureQuadratic { dim: 2, n: 5, spread: 1.0, seed: 0 },
            mode: ModeSpec::Online,
            ..Default::default()
        };
        assert_eq!(build_instance(&online).unwrap().problem.components(), page_core::ComponentCount::Streaming);

        let bad = ExperimentSpec { mode: ModeSpec::Online, ..Default::default() };
        assert!(matches!(build_instance(&bad), Err(HarnessError::Problem(_))));

        let logistic = ExperimentSpec {
            problem: ProblemSpec::Logistic { dim: 3, n: 10, lambda: 0.1, flip: 0.1, seed: 0 },
            x0: InitSpec::Gap { gap: 1.0, seed: 0 },
            ..Default::default()
        };
        assert!(build_instance(&logistic).is_err());
    }
}
