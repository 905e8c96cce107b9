use alloc::vec;
use alloc::vec::Vec;

use super::{Certification, ComponentCount, FiniteSumProblem, ProblemConstants, ProblemError};
use crate::linalg::{dot_slices, Matrix, Vector};
use crate::rng::RandomSource;

/// `H = I - 2 v vᵀ / ‖v‖²`, a symmetric orthogonal matrix.
fn householder(rng: &mut RandomSource, dim: usize) -> Matrix {
    let v = rng.normal_vec(dim);
    let nsq = dot_slices(&v, &v);
    let mut h = Matrix::identity(dim);
    if nsq > 0.0 {
        for i in 0..dim {
            for j in 0..dim {
                h.set(i, j, h.get(i, j) - 2.0 * v[i] * v[j] / nsq);
            }
        }
    }
    h
}

/// `H diag(eigenvalues) H` for a random reflector `H`.
fn rotated_spectrum(rng: &mut RandomSource, eigenvalues: &[f64]) -> Matrix {
    let h = householder(rng, eigenvalues.len());
    let mut m = h.mul(&Matrix::diagonal(eigenvalues)).mul(&h);
    m.symmetrize();
    m
}

fn quadratic_value(a: &Matrix, b: &Vector, x: &Vector) -> f64 {
    let mut ax = vec![0.0; a.dim()];
    a.mul_vec_into(x.as_slice(), &mut ax);
    0.5 * dot_slices(x.as_slice(), &ax) - dot_slices(b.as_slice(), x.as_slice())
}

fn quadratic_gradient(a: &Matrix, b: &Vector, x: &Vector) -> Vector {
    let mut out = vec![0.0; a.dim()];
    a.mul_vec_into(x.as_slice(), &mut out);
    for (o, bi) in out.iter_mut().zip(b.iter()) {
        *o -= bi;
    }
    Vector::from_raw(out)
}

fn add_quadratic_gradient(a: &Matrix, b: &Vector, x: &Vector, alpha: f64, out: &mut Vector) {
    let xs = x.as_slice();
    for (r, o) in out.as_mut_slice().iter_mut().enumerate() {
        *o += alpha * (dot_slices(a.row(r), xs) - b[r]);
    }
}

fn mean_vector(vs: &[Vector], dim: usize) -> Vector {
    let refs: Vec<&Vector> = vs.iter().collect();
    mean_of(&refs, dim)
}

fn mean_of(vs: &[&Vector], dim: usize) -> Vector {
    // identical entries must average to themselves exactly
    if vs.iter().all(|v| *v == vs[0]) {
        return vs[0].clone();
    }
    let mut mean = vec![0.0; dim];
    for v in vs {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    let n = vs.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Vector::from_raw(mean)
}

/// `x* + r u` with `½ r² uᵀHu = gap`, so that `f(x) - f* = gap` for a
/// quadratic with Hessian `H` and minimizer `x*`.
fn point_with_gap(
    hessian: &Matrix,
    minimizer: &Vector,
    gap: f64,
    rng: &mut RandomSource,
) -> Result<Vector, ProblemError> {
    if !(gap >= 0.0) {
        return Err(ProblemError::InvalidParameter("gap must be nonnegative"));
    }
    let d = hessian.dim();
    let mut u = rng.normal_vec(d);
    let nu = libm::sqrt(dot_slices(&u, &u));
    u.iter_mut().for_each(|x| *x /= nu);
    let mut hu = vec![0.0; d];
    hessian.mul_vec_into(&u, &mut hu);
    let curvature = dot_slices(&u, &hu);
    let r = libm::sqrt(2.0 * gap / curvature);
    let entries: Vec<f64> = minimizer.iter().zip(&u).map(|(m, ui)| m + r * ui).collect();
    Ok(Vector::new(entries)?)
}

/// `f_i(x) = ½ xᵀAx - b_iᵀx` with one shared positive definite `A`.
///
/// Here `∇f_i(x) - ∇f(x) = b̄ - b_i` does not depend on `x`, so
/// `σ² = (1/n) Σ ‖b_i - b̄‖²` is exact, as are `L = λ_max(A)` and
/// `f* = -½ b̄ᵀA⁻¹b̄`.
#[derive(Debug, Clone)]
pub struct SharedCurvatureQuadratic {
    curvature: Matrix,
    offsets: Vec<Vector>,
    mean_offset: Vector,
    constants: ProblemConstants,
}

impl SharedCurvatureQuadratic {
    /// Builds from an explicit `A` and offsets `b_i`; `L` is found by power
    /// iteration on `A`.
    pub fn new(curvature: Matrix, offsets: Vec<Vector>) -> Result<Self, ProblemError> {
        let start = vec![1.0; curvature.dim()];
        let l = curvature.power_iteration_max_eigenvalue(&start);
        Self::assemble(curvature, offsets, l, Certification::ComputedByOracle)
    }

    /// Random instance: `A` has eigenvalues drawn from `[0.1, 1]` under a
    /// random reflection, `b_i = b̄ + spread (z_i - z̄)` with Gaussian `z_i`.
    pub fn generate(
        rng: &mut RandomSource,
        dim: usize,
        n: usize,
        spread: f64,
    ) -> Result<Self, ProblemError> {
        if dim == 0 {
            return Err(ProblemError::InvalidParameter("dimension must be at least 1"));
        }
        if n < 2 {
            return Err(ProblemError::InvalidParameter("need at least 2 components"));
        }
        if !(spread >= 0.0) || !spread.is_finite() {
            return Err(ProblemError::InvalidParameter("spread must be finite and nonnegative"));
        }
        let eigenvalues: Vec<f64> = (0..dim).map(|_| rng.uniform_range(0.1, 1.0)).collect();
        let l = eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let curvature = rotated_spectrum(rng, &eigenvalues);
        let center = rng.normal_vec(dim);
        let noise: Vec<Vec<f64>> = (0..n).map(|_| rng.normal_vec(dim)).collect();
        let mut noise_mean = vec![0.0; dim];
        for z in &noise {
            for (m, zi) in noise_mean.iter_mut().zip(z) {
                *m += zi / n as f64;
            }
        }
        let offsets = noise
            .iter()
            .map(|z| {
                let entries: Vec<f64> = center
                    .iter()
                    .zip(z)
                    .zip(&noise_mean)
                    .map(|((c, zi), m)| c + spread * (zi - m))
                    .collect();
                Vector::new(entries)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::assemble(curvature, offsets, l, Certification::Analytic)
    }

    fn assemble(
        curvature: Matrix,
        offsets: Vec<Vector>,
        smoothness: f64,
        certification: Certification,
    ) -> Result<Self, ProblemError> {
        let dim = curvature.dim();
        if offsets.is_empty() {
            return Err(ProblemError::EmptyDataset);
        }
        if offsets.iter().any(|b| b.len() != dim) {
            return Err(ProblemError::Shape("offset length differs from matrix dimension"));
        }
        let chol = curvature.cholesky().map_err(|_| ProblemError::Degenerate)?;
        let mean_offset = mean_vector(&offsets, dim);
        let sigma_sq = offsets
            .iter()
            .map(|b| b.dist_sq(&mean_offset).expect("lengths checked"))
            .sum::<f64>()
            / offsets.len() as f64;
        let minimizer = chol.solve(&mean_offset)?;
        let f_star = -0.5 * dot_slices(mean_offset.as_slice(), minimizer.as_slice());
        let constants = ProblemConstants {
            smoothness,
            sigma_sq: Some(sigma_sq),
            f_star: Some(f_star),
            f_lower_bound: Some(f_star),
            minimizer: Some(minimizer),
            certification,
        };
        Ok(Self { curvature, offsets, mean_offset, constants })
    }

    pub fn curvature(&self) -> &Matrix {
        &self.curvature
    }

    pub fn offsets(&self) -> &[Vector] {
        &self.offsets
    }

    pub fn mean_offset(&self) -> &Vector {
        &self.mean_offset
    }

    /// A point with `f(x) - f* = gap` in a random direction from `x*`.
    pub fn point_with_gap(&self, gap: f64, rng: &mut RandomSource) -> Result<Vector, ProblemError> {
        let minimizer = self.constants.minimizer.as_ref().expect("always certified");
        point_with_gap(&self.curvature, minimizer, gap, rng)
    }
}

impl FiniteSumProblem for SharedCurvatureQuadratic {
    fn dim(&self) -> usize {
        self.curvature.dim()
    }

    fn components(&self) -> ComponentCount {
        ComponentCount::Finite(self.offsets.len())
    }

    fn sample_pool(&self) -> usize {
        self.offsets.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        quadratic_value(&self.curvature, &self.mean_offset, x)
    }

    fn full_gradient(&self, x: &Vector) -> Vector {
        quadratic_gradient(&self.curvature, &self.mean_offset, x)
    }

    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        quadratic_value(&self.curvature, &self.offsets[i], x)
    }

    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        quadratic_gradient(&self.curvature, &self.offsets[i], x)
    }

    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        add_quadratic_gradient(&self.curvature, &self.offsets[i], x, alpha, out)
    }

    /// One product with `A` against the averaged offsets.
    fn minibatch_gradient(&self, indices: &[usize], x: &Vector) -> Vector {
        let picked: Vec<&Vector> = indices.iter().map(|&i| &self.offsets[i]).collect();
        quadratic_gradient(&self.curvature, &mean_of(&picked, self.dim()), x)
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
}

/// `f_i(x) = ½ xᵀA_i x - b_iᵀx` with distinct symmetric `A_i`.
///
/// The tight average-smoothness constant is
/// `L = sqrt(λ_max((1/n) Σ A_iᵀA_i))`, computed by power iteration. `f*`
/// comes from the averaged system `Ā x = b̄`. No variance bound exists.
#[derive(Debug, Clone)]
pub struct HeterogeneousQuadratic {
    matrices: Vec<Matrix>,
    offsets: Vec<Vector>,
    mean_matrix: Matrix,
    mean_offset: Vector,
    constants: ProblemConstants,
}

impl HeterogeneousQuadratic {
    pub fn from_components(matrices: Vec<Matrix>, offsets: Vec<Vector>) -> Result<Self, ProblemError> {
        if matrices.is_empty() {
            return Err(ProblemError::EmptyDataset);
        }
        if matrices.len() != offsets.len() {
            return Err(ProblemError::Shape("matrix and offset counts differ"));
        }
        let dim = matrices[0].dim();
        if matrices.iter().any(|m| m.dim() != dim) || offsets.iter().any(|b| b.len() != dim) {
            return Err(ProblemError::Shape("component dimensions differ"));
        }
        let n = matrices.len() as f64;
        let mut mean_matrix = Matrix::zeros(dim);
        let mut gram = Matrix::zeros(dim);
        for m in &matrices {
            mean_matrix.add_scaled_assign(1.0 / n, m);
            gram.add_scaled_assign(1.0 / n, &m.transpose().mul(m));
        }
        gram.symmetrize();
        let start: Vec<f64> = (0..dim).map(|i| 1.0 + 0.1 * i as f64).collect();
        let smoothness = libm::sqrt(gram.power_iteration_max_eigenvalue(&start));
        let mean_offset = mean_vector(&offsets, dim);
        let chol = mean_matrix.cholesky().map_err(|_| ProblemError::SingularAverage)?;
        let minimizer = chol.solve(&mean_offset)?;
        let f_star = -0.5 * dot_slices(mean_offset.as_slice(), minimizer.as_slice());
        let constants = ProblemConstants {
            smoothness,
            sigma_sq: None,
            f_star: Some(f_star),
            f_lower_bound: Some(f_star),
            minimizer: Some(minimizer),
            certification: Certification::ComputedByOracle,
        };
        Ok(Self { matrices, offsets, mean_matrix, mean_offset, constants })
    }

    /// Random instance with unit heterogeneity; see [`Self::generate_with`].
    pub fn generate(
        rng: &mut RandomSource,
        dim: usize,
        n: usize,
        condition: f64,
    ) -> Result<Self, ProblemError> {
        Self::generate_with(rng, dim, n, condition, 1.0)
    }

    /// `A_i = Ā + heterogeneity (S_i - S̄)`, where `Ā` has log-spaced
    /// eigenvalues in `[1/condition, 1]` and the `S_i` are Gaussian symmetric
    /// matrices of unit spectral scale. The mean Hessian is exactly `Ā`; the
    /// components are indefinite once the heterogeneity dominates.
    pub fn generate_with(
        rng: &mut RandomSource,
        dim: usize,
        n: usize,
        condition: f64,
        heterogeneity: f64,
    ) -> Result<Self, ProblemError> {
        if dim == 0 {
            return Err(ProblemError::InvalidParameter("dimension must be at least 1"));
        }
        if n == 0 {
            return Err(ProblemError::InvalidParameter("need at least 1 component"));
        }
        if !(condition >= 1.0) || !condition.is_finite() {
            return Err(ProblemError::InvalidParameter("condition must be finite and >= 1"));
        }
        if !(heterogeneity >= 0.0) || !heterogeneity.is_finite() {
            return Err(ProblemError::InvalidParameter("heterogeneity must be finite and >= 0"));
        }
        let eigenvalues: Vec<f64> = (0..dim)
            .map(|j| {
                let frac = if dim == 1 { 1.0 } else { j as f64 / (dim - 1) as f64 };
                libm::pow(condition, frac - 1.0)
            })
            .collect();
        let mean = rotated_spectrum(rng, &eigenvalues);
        let scale = heterogeneity / (2.0 * libm::sqrt(dim as f64));
        let mut perturbations: Vec<Matrix> = (0..n)
            .map(|_| {
                let g = Matrix::from_row_major(dim, rng.normal_vec(dim * dim))
                    .expect("finite gaussian entries");
                let mut s = g.clone();
                s.add_scaled_assign(1.0, &g.transpose());
                s.scale_assign(0.5 * scale);
                s
            })
            .collect();
        let mut perturbation_mean = Matrix::zeros(dim);
        for s in &perturbations {
            perturbation_mean.add_scaled_assign(1.0 / n as f64, s);
        }
        for s in &mut perturbations {
            s.add_scaled_assign(-1.0, &perturbation_mean);
            s.add_scaled_assign(1.0, &mean);
            s.symmetrize();
        }
        let offsets = (0..n)
            .map(|_| Vector::new(rng.normal_vec(dim)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_components(perturbations, offsets)
    }

    /// Multiplies every `A_i` and `b_i` by `factor > 0`, which scales `L`,
    /// `f` and `f*` by `factor` and leaves the minimizer unchanged.
    pub fn rescaled(&self, factor: f64) -> Result<Self, ProblemError> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(ProblemError::InvalidParameter("scale factor must be positive"));
        }
        let matrices = self
            .matrices
            .iter()
            .map(|m| {
                let mut m = m.clone();
                m.scale_assign(factor);
                m
            })
            .collect();
        let offsets = self.offsets.iter().map(|b| b.scaled(factor)).collect();
        Self::from_components(matrices, offsets)
    }

    /// Rescaled so that the certified `L` is 1 (up to power-iteration rounding).
    pub fn with_unit_smoothness(&self) -> Result<Self, ProblemError> {
        self.rescaled(1.0 / self.constants.smoothness)
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn offsets(&self) -> &[Vector] {
        &self.offsets
    }

    pub fn mean_matrix(&self) -> &Matrix {
        &self.mean_matrix
    }

    /// `(1/n) Σ A_iᵀA_i`, whose top eigenvalue is `L²`.
    pub fn gram_matrix(&self) -> Matrix {
        let dim = self.dim();
        let n = self.matrices.len() as f64;
        let mut gram = Matrix::zeros(dim);
        for m in &self.matrices {
            gram.add_scaled_assign(1.0 / n, &m.transpose().mul(m));
        }
        gram
    }

    pub fn point_with_gap(&self, gap: f64, rng: &mut RandomSource) -> Result<Vector, ProblemError> {
        let minimizer = self.constants.minimizer.as_ref().expect("always certified");
        point_with_gap(&self.mean_matrix, minimizer, gap, rng)
    }
}

impl FiniteSumProblem for HeterogeneousQuadratic {
    fn dim(&self) -> usize {
        self.mean_matrix.dim()
    }

    fn components(&self) -> ComponentCount {
        ComponentCount::Finite(self.matrices.len())
    }

    fn sample_pool(&self) -> usize {
        self.matrices.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        quadratic_value(&self.mean_matrix, &self.mean_offset, x)
    }

    fn full_gradient(&self, x: &Vector) -> Vector {
        quadratic_gradient(&self.mean_matrix, &self.mean_offset, x)
    }

    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        quadratic_value(&self.matrices[i], &self.offsets[i], x)
    }

    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        quadratic_gradient(&self.matrices[i], &self.offsets[i], x)
    }

    fn add_component_gradient(&self, i: usize, x: &Vector, alpha: f64, out: &mut Vector) {
        add_quadratic_gradient(&self.matrices[i], &self.offsets[i], x, alpha, out)
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
}
