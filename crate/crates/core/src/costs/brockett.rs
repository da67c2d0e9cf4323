use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_direction, check_point, CostFunction};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifolds::{Manifold, ManifoldPoint, MetricMatrix};

/// `f(C) = tr(C^T A C)` for symmetric `A`. Invariant under `C -> C M` for
/// orthogonal `M`, so it descends to the Grassmannian; its minimum over
/// `C^T S C = Id` is the sum of the `N` smallest generalized eigenvalues of `(A, S)`.
#[derive(Debug, Clone)]
pub struct Brockett {
    a: Mat,
    metric: Arc<MetricMatrix>,
}

impl Brockett {
    pub fn new(a: Mat, metric: Arc<MetricMatrix>) -> Result<Self> {
        if a.shape() != (metric.dim(), metric.dim()) {
            return Err(crate::error::dim_err(format!(
                "A is {}x{} but the metric is {}x{}",
                a.nrows(),
                a.ncols(),
                metric.dim(),
                metric.dim()
            )));
        }
        let asym = (&a - a.transpose()).norm();
        if asym > 1e-12 * a.norm().max(1.0) {
            return Err(Error::Contract(format!(
                "Brockett matrix A is not symmetric (||A - A^T|| = {asym:.3e})"
            )));
        }
        Ok(Self { a, metric })
    }

    /// Builds `A` whose generalized eigenvalues against `S` are exactly
    /// `eigenvalues`, with eigenvectors rotated by a seeded random orthogonal matrix.
    pub fn with_spectrum(eigenvalues: &[f64], metric: Arc<MetricMatrix>, seed: u64) -> Result<Self> {
        let d = metric.dim();
        if eigenvalues.len() != d {
            return Err(crate::error::dim_err(format!(
                "need {d} eigenvalues, got {}",
                eigenvalues.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let q = raw.qr().q();
        let lambda = Mat::from_diagonal(&linalg::Vector::from_column_slice(eigenvalues));
        let lq = metric.cholesky_lower() * q;
        let a = &lq * lambda * lq.transpose();
        let a = linalg::sym(&a)?;
        Self::new(a, metric)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    /// Sum of the `n` smallest generalized eigenvalues of `(A, S)`.
    pub fn minimum(&self, n: usize) -> Result<f64> {
        let eig = linalg::gen_eigen(&self.a, self.metric.matrix())?;
        Ok(eig.eigenvalues.iter().take(n).sum())
    }

    /// A global minimizer: the `n` lowest generalized eigenvectors.
    pub fn minimizer(&self, n: usize, manifold: Manifold) -> Result<ManifoldPoint> {
        let eig = linalg::gen_eigen(&self.a, self.metric.matrix())?;
        let c = eig.eigenvectors.columns(0, n).into_owned();
        ManifoldPoint::new(c, Arc::clone(&self.metric), manifold)
    }
}

impl CostFunction for Brockett {
    fn metric(&self) -> &Arc<MetricMatrix> {
        &self.metric
    }

    fn value(&self, c: &Mat) -> Result<f64> {
        check_point(self.dim(), c)?;
        Ok(c.dot(&(&self.a * c)))
    }

    fn euclidean_gradient(&self, c: &Mat) -> Result<Mat> {
        check_point(self.dim(), c)?;
        Ok(&self.a * c * 2.0)
    }

    fn euclidean_hessian_apply(&self, c: &Mat, v: &Mat) -> Result<Mat> {
        check_point(self.dim(), c)?;
        check_direction(c, v)?;
        Ok(&self.a * v * 2.0)
    }

    fn euclidean_hessian_matrix(&self, c: &Mat) -> Result<Mat> {
        check_point(self.dim(), c)?;
        let n = c.ncols();
        Ok(linalg::kron(&Mat::identity(n, n), &(&self.a * 2.0)))
    }

    fn label(&self) -> String {
        format!("brockett(d={})", self.dim())
    }
}
