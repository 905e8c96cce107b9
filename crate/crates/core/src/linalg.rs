//! Dense real vectors and the handful of small dense-matrix routines the
//! problem generators need (matvec, Cholesky solve, power iteration).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Index;

use thiserror::Error;

/// Errors raised by vector and matrix arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// A dense point or gradient in `R^d`.
///
/// The length is fixed at construction. Every constructor that takes
/// caller data rejects NaN and infinite entries.
#[derive(Clone, PartialEq, Default)]
pub struct Vector {
    entries: Vec<f64>,
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.iter()).finish()
    }
}

fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, LinalgError> {
        match first_non_finite(&entries) {
            Some(index) => Err(LinalgError::NonFinite { index }),
            None => Ok(Self { entries }),
        }
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self, LinalgError> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: vec![0.0; dim] }
    }

    /// Standard basis vector `e_index` in `R^dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = 1.0;
        v
    }

    /// Wraps oracle output without the finiteness scan. Divergence is caught
    /// by the optimizer guard instead.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.entries.iter()
    }

    pub fn is_finite(&self) -> bool {
        first_non_finite(&self.entries).is_none()
    }

    fn check_len(&self, other: &Vector) -> Result<(), LinalgError> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch { left: self.len(), right: other.len() })
        }
    }

    pub fn dot(&self, other: &Vector) -> Result<f64, LinalgError> {
        self.check_len(other)?;
        Ok(dot_slices(&self.entries, &other.entries))
    }

    pub fn norm_sq(&self) -> f64 {
        dot_slices(&self.entries, &self.entries)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// `alpha * x + y`, the update `x_{t+1} = x_t - eta * g_t` with `alpha = -eta`.
    pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector, LinalgError> {
        x.check_len(y)?;
        let entries: Vec<f64> =
            x.entries.iter().zip(&y.entries).map(|(xi, yi)| alpha * xi + yi).collect();
        Vector::new(entries)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector, LinalgError> {
        Vector::axpy(-1.0, other, self)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector, LinalgError> {
        Vector::axpy(1.0, other, self)
    }

    pub fn scaled(&self, alpha: f64) -> Vector {
        Vector::from_raw(self.entries.iter().map(|v| alpha * v).collect())
    }

    /// `self += alpha * x` in place. Skips the finiteness scan.
    pub fn add_scaled_assign(&mut self, alpha: f64, x: &Vector) -> Result<(), LinalgError> {
        self.check_len(x)?;
        for (s, xi) in self.entries.iter_mut().zip(&x.entries) {
            *s += alpha * xi;
        }
        Ok(())
    }

    /// `‖self - other‖²` without allocating.
    pub fn dist_sq(&self, other: &Vector) -> Result<f64, LinalgError> {
        self.check_len(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.entries[index]
    }
}

impl<'a> IntoIterator for &'a Vector {
    type Item = &'a f64;
    type IntoIter = core::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

pub fn dot(a: &Vector, b: &Vector) -> Result<f64, LinalgError> {
    a.dot(b)
}

pub fn norm_sq(a: &Vector) -> f64 {
    a.norm_sq()
}

pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector, LinalgError> {
    Vector::axpy(alpha, x, y)
}

#[inline]
pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major dense square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch { left: data.len(), right: dim * dim });
        }
        if let Some(index) = first_non_finite(&data) {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// `out = self * x`, written into a caller buffer.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot_slices(self.row(r), x);
        }
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector, LinalgError> {
        if x.len() != self.dim {
            return Err(LinalgError::DimensionMismatch { left: self.dim, right: x.len() });
        }
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(x.as_slice(), &mut out);
        Ok(Vector::from_raw(out))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self += alpha * other`.
    pub fn add_scaled_assign(&mut self, alpha: f64, other: &Matrix) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += alpha * o;
        }
    }

    pub fn scale_assign(&mut self, alpha: f64) {
        for s in &mut self.data {
            *s *= alpha;
        }
    }

    /// Replaces the matrix by `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        let d = self.dim;
        let mut l = Matrix::zeros(d);
        for j in 0..d {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l.get(j, k) * l.get(j, k);
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite);
            }
            let ljj = libm::sqrt(diag);
            l.set(j, j, ljj);
            for i in (j + 1)..d {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(Cholesky { lower: l })
    }

    /// Largest eigenvalue of a symmetric positive semidefinite matrix by
    /// power iteration with Rayleigh-quotient convergence.
    pub fn power_iteration_max_eigenvalue(&self, start: &[f64]) -> f64 {
        const MAX_ITERS: usize = 200_000;
        const REL_TOL: f64 = 1e-15;
        let d = self.dim;
        if d == 0 {
            return 0.0;
        }
        let mut v: Vec<f64> = start.to_vec();
        let mut w = vec![0.0; d];
        let normalize = |v: &mut [f64]| {
            let n = libm::sqrt(dot_slices(v, v));
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
            n
        };
        if normalize(&mut v) == 0.0 {
            v[0] = 1.0;
        }
        let mut lambda = 0.0;
        let mut settled = 0;
        for _ in 0..MAX_ITERS {
            self.mul_vec_into(&v, &mut w);
            let next = dot_slices(&v, &w);
            if normalize(&mut w) == 0.0 {
                return 0.0;
            }
            core::mem::swap(&mut v, &mut w);
            if (next - lambda).abs() <= REL_TOL * next.abs() {
                settled += 1;
                if settled >= 3 {
                    lambda = lambda.max(next);
                    break;
                }
            } else {
                settled = 0;
            }
            lambda = next;
        }
        lambda
    }
}

/// Cholesky factorization `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    pub fn solve(&self, rhs: &Vector) -> Result<Vector, LinalgError> {
        let l = &self.lower;
        let d = l.dim();
        if rhs.len() != d {
            return Err(LinalgError::DimensionMismatch { left: d, right: rhs.len() });
        }
        let mut y = rhs.as_slice().to_vec();
        for i in 0..d {
            let mut s = y[i];
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in (i + 1)..d {
                s -= l.get(k, i) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        Vector::new(y)
    }
}
