//! Seeded random source.
//!
//! Backed by xoshiro256++ seeded through SplitMix64. `split` hands the child
//! the current state and moves the parent 2^128 draws ahead with the
//! generator's jump polynomial, so parent and child streams never overlap.
//! Sequences are reproducible within this implementation only.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("probability {0} outside (0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("cannot draw {k} distinct indices from {n}")]
    TooManyWithoutReplacement { k: usize, n: usize },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("index pool is empty")]
    EmptyPool,
}

#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    /// The seed this source (or its root ancestor) was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Returns an independent child stream and advances `self` past it.
    pub fn split(&mut self) -> RandomSource {
        let child = self.clone();
        self.inner.jump();
        child
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform in `[low, high)`.
    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform index in `[0, n)`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    pub fn normal_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.normal()).collect()
    }

    /// `true` with probability `p`, for `p` in `(0, 1]`.
    pub fn bernoulli(&mut self, p: f64) -> Result<bool, SampleError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(SampleError::ProbabilityOutOfRange(p));
        }
        Ok(p == 1.0 || self.uniform() < p)
    }

    /// `k` indices from `[0, n)`: i.i.d. uniform when `with_replacement`,
    /// otherwise a uniformly random `k`-subset in random order.
    pub fn sample_indices(
        &mut self,
        n: usize,
        k: usize,
        with_replacement: bool,
    ) -> Result<Vec<usize>, SampleError> {
        if k == 0 {
            return Err(SampleError::EmptySample);
        }
        if n == 0 {
            return Err(SampleError::EmptyPool);
        }
        if with_replacement {
            Ok((0..k).map(|_| self.index(n)).collect())
        } else if k > n {
            Err(SampleError::TooManyWithoutReplacement { k, n })
        } else {
            Ok(index::sample(&mut self.inner, n, k).into_vec())
        }
    }
}

pub fn sample_indices(
    rng: &mut RandomSource,
    n: usize,
    k: usize,
    with_replacement: bool,
) -> Result<Vec<usize>, SampleError> {
    rng.sample_indices(n, k, with_replacement)
}

pub fn bernoulli(rng: &mut RandomSource, p: f64) -> Result<bool, SampleError> {
    rng.bernoulli(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_outcome() {
        let mut rng = RandomSource::new(3);
        assert_eq!(rng.sample_indices(1, 1, true).unwrap(), vec![0]);
        assert_eq!(rng.sample_indices(1, 1, false).unwrap(), vec![0]);
    }

    #[test]
    fn exhaustive_without_replacement_is_permutation() {
        let mut rng = RandomSource::new(11);
        let mut idx = rng.sample_indices(5, 5, false).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rejects_bad_requests() {
        let mut rng = RandomSource::new(0);
        assert_eq!(
            rng.sample_indices(3, 4, false),
            Err(SampleError::TooManyWithoutReplacement { k: 4, n: 3 })
        );
        assert_eq!(rng.sample_indices(3, 0, true), Err(SampleError::EmptySample));
        assert!(rng.bernoulli(0.0).is_err());
        assert!(rng.bernoulli(1.5).is_err());
        assert!(rng.bernoulli(f64::NAN).is_err());
    }

    #[test]
    fn p_one_always_true() {
        let mut rng = RandomSource::new(5);
        assert!((0..1000).all(|_| rng.bernoulli(1.0).unwrap()));
    }

    #[test]
    fn reseeding_reproduces() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        for _ in 0..50 {
            assert_eq!(a.sample_indices(17, 4, true), b.sample_indices(17, 4, true));
            assert_eq!(a.bernoulli(0.3), b.bernoulli(0.3));
            assert_eq!(a.sample_indices(17, 4, false), b.sample_indices(17, 4, false));
        }
    }

    #[test]
    fn split_streams_differ() {
        let mut parent = RandomSource::new(9);
        let mut child = parent.split();
        let a: Vec<u64> = (0..8).map(|_| parent.next_u64()).collect();
        let b: Vec<u64> = (0..8).map(|_| child.next_u64()).collect();
        assert_ne!(a, b);
    }
}
