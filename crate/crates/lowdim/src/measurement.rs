//! Rank-1 measurement ensembles and the linear maps they induce.
//!
//! An ensemble is `k` vector pairs `(a_i, b_i)`; it measures a matrix `X` as
//! `y_i = a_i^T X b_i`, i.e. the trace inner product of `X` with the rank-1
//! matrix `a_i b_i^T`. Genericity ("almost all ensembles") is realized by
//! random sampling: any absolutely continuous law works, and both Gaussian
//! and uniform-ball column distributions are provided because the
//! concentration experiments specifically need uniform-ball columns.

use crate::rng::Rng;
use crate::{Matrix, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MeasurementError {
    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {got_rows}x{got_cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("measurement vector has length {got}, ensemble has k = {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("support index ({row}, {col}) out of range for a {m}x{n} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        m: usize,
        n: usize,
    },
    #[error("duplicate support index ({row}, {col})")]
    DuplicateIndex { row: usize, col: usize },
    #[error("support must be nonempty")]
    EmptySupport,
}

/// Column distribution of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnDistribution {
    /// `a_i` uniform on the ball of radius `radius_a` in R^m, `b_i` uniform
    /// on the ball of radius `radius_b` in R^n.
    UniformBall { radius_a: f64, radius_b: f64 },
    /// Independent standard normal entries.
    Gaussian,
}

impl Default for ColumnDistribution {
    fn default() -> Self {
        ColumnDistribution::UniformBall {
            radius_a: 1.0,
            radius_b: 1.0,
        }
    }
}

/// `k` rank-1 measurement functionals on m-by-n matrices.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub a_vectors: Vec<Vector>,
    pub b_vectors: Vec<Vector>,
    pub distribution: ColumnDistribution,
    pub seed: u64,
}

/// Uniform draw from the open ball of the given radius in R^dim:
/// direction uniform on the sphere, radius `s * U^(1/dim)` with U uniform
/// on (0, 1).
pub fn sample_uniform_ball(dim: usize, radius: f64, rng: &mut Rng) -> Vector {
    assert!(dim >= 1, "dim must be >= 1");
    assert!(radius > 0.0, "radius must be positive");
    let mut v = Vector::zeros(dim);
    loop {
        for i in 0..dim {
            v[i] = rng.standard_normal();
        }
        let norm = v.norm();
        if norm > 0.0 {
            let r = radius * rng.uniform01_open().powf(1.0 / dim as f64);
            v *= r / norm;
            return v;
        }
    }
}

/// Standard normal vector in R^dim.
pub fn sample_gaussian(dim: usize, rng: &mut Rng) -> Vector {
    Vector::from_fn(dim, |_, _| rng.standard_normal())
}

impl Ensemble {
    /// Samples an ensemble. Deterministic given `seed`; columns are drawn
    /// sequentially from one stream (a_1..a_k, then b_1..b_k) and are
    /// mutually independent.
    pub fn sample(
        m: usize,
        n: usize,
        k: usize,
        distribution: ColumnDistribution,
        seed: u64,
    ) -> Self {
        assert!(m >= 1 && n >= 1 && k >= 1, "m, n, k must be >= 1");
        let mut rng = Rng::from_seed(seed);
        let draw = |dim: usize, radius: f64, rng: &mut Rng| match distribution {
            ColumnDistribution::UniformBall { .. } => sample_uniform_ball(dim, radius, rng),
            ColumnDistribution::Gaussian => sample_gaussian(dim, rng),
        };
        let (ra, rb) = match distribution {
            ColumnDistribution::UniformBall { radius_a, radius_b } => (radius_a, radius_b),
            ColumnDistribution::Gaussian => (1.0, 1.0),
        };
        let a_vectors = (0..k).map(|_| draw(m, ra, &mut rng)).collect();
        let b_vectors = (0..k).map(|_| draw(n, rb, &mut rng)).collect();
        Ensemble {
            m,
            n,
            k,
            a_vectors,
            b_vectors,
            distribution,
            seed,
        }
    }

    fn check_shape(&self, x: &Matrix) -> Result<(), MeasurementError> {
        if x.nrows() != self.m || x.ncols() != self.n {
            return Err(MeasurementError::ShapeMismatch {
                expected_rows: self.m,
                expected_cols: self.n,
                got_rows: x.nrows(),
                got_cols: x.ncols(),
            });
        }
        Ok(())
    }

    /// The measurement map: `y_i = a_i^T X b_i`.
    pub fn apply(&self, x: &Matrix) -> Result<Vector, MeasurementError> {
        self.check_shape(x)?;
        let mut y = Vector::zeros(self.k);
        for i in 0..self.k {
            y[i] = self.a_vectors[i].dot(&(x * &self.b_vectors[i]));
        }
        Ok(y)
    }

    /// Adjoint of the measurement map: `Adj(z) = sum_i z_i a_i b_i^T`, so
    /// that `<Adj(z), X> = <z, apply(X)>` for all X.
    pub fn adjoint(&self, z: &Vector) -> Result<Matrix, MeasurementError> {
        if z.len() != self.k {
            return Err(MeasurementError::LengthMismatch {
                expected: self.k,
                got: z.len(),
            });
        }
        let mut out = Matrix::zeros(self.m, self.n);
        for i in 0..self.k {
            out.ger(z[i], &self.a_vectors[i], &self.b_vectors[i], 1.0);
        }
        Ok(out)
    }

    /// Linearization over a fixed support: the k-by-|support| matrix with
    /// entry (i, j) equal to `a_i[p_j] * b_i[q_j]`. For X supported on
    /// `support`, `apply(X)` equals this matrix times the entries of X read
    /// in support order. Indices are 0-based.
    pub fn restricted_matrix(
        &self,
        support: &[(usize, usize)],
    ) -> Result<Matrix, MeasurementError> {
        if support.is_empty() {
            return Err(MeasurementError::EmptySupport);
        }
        for (j, &(p, q)) in support.iter().enumerate() {
            if p >= self.m || q >= self.n {
                return Err(MeasurementError::IndexOutOfRange {
                    row: p,
                    col: q,
                    m: self.m,
                    n: self.n,
                });
            }
            if support[..j].contains(&(p, q)) {
                return Err(MeasurementError::DuplicateIndex { row: p, col: q });
            }
        }
        Ok(Matrix::from_fn(self.k, support.len(), |i, j| {
            let (p, q) = support[j];
            self.a_vectors[i][p] * self.b_vectors[i][q]
        }))
    }

    /// Rank-1 measurement matrices `A_i = a_i b_i^T` as dense matrices.
    pub fn measurement_matrices(&self) -> Vec<Matrix> {
        (0..self.k)
            .map(|i| &self.a_vectors[i] * self.b_vectors[i].transpose())
            .collect()
    }

    /// Largest singular value of the full k-by-(m n) linearization; its
    /// square is the Lipschitz constant of `X -> adjoint(apply(X))`, used
    /// to pick projected-gradient step sizes.
    pub fn operator_norm(&self) -> f64 {
        let full: Vec<(usize, usize)> = (0..self.m)
            .flat_map(|p| (0..self.n).map(move |q| (p, q)))
            .collect();
        let mat = self
            .restricted_matrix(&full)
            .expect("full support is valid");
        mat.singular_values().max()
    }
}

/// General linear measurements `y_i = <A_i, X> = tr(A_i^T X)`.
pub fn apply_general(
    measurement_matrices: &[Matrix],
    x: &Matrix,
) -> Result<Vector, MeasurementError> {
    let mut y = Vector::zeros(measurement_matrices.len());
    for (i, a) in measurement_matrices.iter().enumerate() {
        if a.shape() != x.shape() {
            return Err(MeasurementError::ShapeMismatch {
                expected_rows: a.nrows(),
                expected_cols: a.ncols(),
                got_rows: x.nrows(),
                got_cols: x.ncols(),
            });
        }
        y[i] = a.dot(x);
    }
    Ok(y)
}
