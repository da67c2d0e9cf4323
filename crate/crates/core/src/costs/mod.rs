//! Cost functions defined on `d x N` coefficient matrices.
//!
//! Every cost is the restriction of a smooth function on all of `R^{d x N}`,
//! so gradients and Hessians here are Euclidean; the manifold layer turns them
//! into Riemannian quantities.

mod brockett;
mod hartree_fock;

use std::sync::Arc;

pub use brockett::Brockett;
pub use hartree_fock::{FockState, HartreeFock, IntegralSet};

#[cfg(test)]
pub(crate) use hartree_fock::tests as hartree_fock_tests;

use crate::error::{dim_err, Result};
use crate::linalg::{self, Mat};
use crate::manifolds::MetricMatrix;

pub trait CostFunction: Send + Sync {
    /// The metric the cost is constrained by.
    fn metric(&self) -> &Arc<MetricMatrix>;

    fn value(&self, c: &Mat) -> Result<f64>;

    fn euclidean_gradient(&self, c: &Mat) -> Result<Mat>;

    /// Euclidean Hessian applied to `v`, a `d x N` matrix.
    fn euclidean_hessian_apply(&self, c: &Mat, v: &Mat) -> Result<Mat>;

    /// Dense `dN x dN` Hessian in the `vec` ordering (`k + i*d` for entry `(k, i)`).
    fn euclidean_hessian_matrix(&self, c: &Mat) -> Result<Mat> {
        let (d, n) = c.shape();
        let mut out = Mat::zeros(d * n, d * n);
        let mut e = Mat::zeros(d, n);
        for col in 0..d * n {
            e[col] = 1.0;
            let hv = self.euclidean_hessian_apply(c, &e)?;
            out.set_column(col, &linalg::vec(&hv));
            e[col] = 0.0;
        }
        Ok(out)
    }

    /// Constant added to reported values (nuclear repulsion for Hartree-Fock).
    fn value_offset(&self) -> f64 {
        0.0
    }

    fn dim(&self) -> usize {
        self.metric().dim()
    }

    /// Short label used in logs and trace headers.
    fn label(&self) -> String;
}

pub(crate) fn check_point(d: usize, c: &Mat) -> Result<()> {
    if c.nrows() != d || c.ncols() == 0 || c.ncols() > d {
        return Err(dim_err(format!(
            "cost expects a {d} x N matrix with 1 <= N <= {d}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_direction(c: &Mat, v: &Mat) -> Result<()> {
    if c.shape() != v.shape() {
        return Err(dim_err(format!(
            "direction is {}x{} but the point is {}x{}",
            v.nrows(),
            v.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(())
}
