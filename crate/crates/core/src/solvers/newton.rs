//! Newton's equation `Hess f(x)[v] = -grad f(x)`, assembled either in an
//! intrinsic tangent basis or as a dense `dN x dN` extrinsic system.

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::manifolds::{Manifold, ManifoldPoint, TangentBasis, TangentVector};

/// Singular values below this fraction of the largest one make a Hessian singular.
pub const SINGULAR_RCOND: f64 = 1e-12;
/// Allowed residual of the stacked extrinsic system, relative to the gradient.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Riemannian Hessian of `cost` at `point` applied to `v`.
pub fn riemannian_hessian(
    cost: &dyn CostFunction,
    point: &ManifoldPoint,
    euclidean_grad: &Mat,
    v: &Mat,
) -> Result<TangentVector> {
    let hv = cost.euclidean_hessian_apply(point.c(), v)?;
    point.riemannian_hessian_apply(euclidean_grad, &hv, v)
}

/// Hessian and gradient expressed in an orthonormal tangent basis.
#[derive(Debug, Clone)]
pub struct IntrinsicSystem {
    /// `H_ij = <b_i, Hess f(x)[b_j]>`.
    pub hessian: Mat,
    /// `g_i = <b_i, grad f(x)>`.
    pub gradient: Vector,
}

pub fn assemble_intrinsic(
    cost: &dyn CostFunction,
    point: &ManifoldPoint,
    basis: &TangentBasis,
) -> Result<IntrinsicSystem> {
    if basis.manifold != point.manifold() {
        return Err(Error::Contract(format!(
            "basis built for {:?} used at a {:?} point",
            basis.manifold,
            point.manifold()
        )));
    }
    let egrad = cost.euclidean_gradient(point.c())?;
    let grad = point.riemannian_gradient(&egrad)?;
    let m = basis.len();
    let mut hessian = Mat::zeros(m, m);
    for (j, b) in basis.elements.iter().enumerate() {
        let hb = riemannian_hessian(cost, point, &egrad, b)?;
        hessian.set_column(j, &basis.coordinates(hb.matrix()));
    }
    Ok(IntrinsicSystem {
        hessian,
        gradient: basis.coordinates(grad.matrix()),
    })
}

impl IntrinsicSystem {
    /// Symmetric part of the Hessian, which is what the eigensolver sees.
    pub fn symmetric_hessian(&self) -> Mat {
        (&self.hessian + self.hessian.transpose()) * 0.5
    }

    /// Solves `H x = -g`, refusing numerically singular `H`.
    pub fn solve(&self) -> Result<Vector> {
        if self.gradient.is_empty() {
            return Ok(Vector::zeros(0));
        }
        let svd = linalg::svd(&self.hessian)?;
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin < SINGULAR_RCOND * smax || !smin.is_finite() {
            return Err(Error::Numerical(format!(
                "Hessian is singular (sigma_min / sigma_max = {:.3e})",
                if smax > 0.0 { smin / smax } else { 0.0 }
            )));
        }
        Ok(svd.pseudo_solve(&(-&self.gradient), 0.0).0)
    }

    /// Solves Newton's equation in the span of eigenvectors with eigenvalue
    /// above `delta`; returns the coordinates and the number discarded.
    pub fn solve_truncated(&self, delta: f64) -> Result<(Vector, usize)> {
        if self.gradient.is_empty() {
            return Ok((Vector::zeros(0), 0));
        }
        let eig = linalg::sym_eigen(&self.symmetric_hessian())?;
        let mut x = Vector::zeros(self.gradient.len());
        let mut discarded = 0;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > delta {
                let u = eig.eigenvectors.column(j);
                x -= u * (u.dot(&self.gradient) / lambda);
            } else {
                discarded += 1;
            }
        }
        if discarded == self.gradient.len() {
            return Err(Error::Numerical(format!(
                "no Hessian eigenvalue exceeds delta = {delta:e}; truncated step is empty"
            )));
        }
        Ok((x, discarded))
    }
}

/// Newton step from the intrinsic Hessian in `basis`.
pub fn newton_step_intrinsic(
    cost: &dyn CostFunction,
    base: &ManifoldPoint,
    basis: &TangentBasis,
) -> Result<TangentVector> {
    let system = assemble_intrinsic(cost, base, basis)?;
    let x = system.solve()?;
    Ok(TangentVector::from_raw(basis.combine(&x), base.manifold()))
}

/// Newton step restricted to Hessian eigenvalues above `delta`.
pub fn newton_step_truncated(
    cost: &dyn CostFunction,
    base: &ManifoldPoint,
    basis: &TangentBasis,
    delta: f64,
) -> Result<TangentVector> {
    if delta < 0.0 || delta.is_nan() {
        return Err(Error::Contract(format!("delta must be >= 0, got {delta}")));
    }
    let system = assemble_intrinsic(cost, base, basis)?;
    let (x, _) = system.solve_truncated(delta)?;
    Ok(TangentVector::from_raw(basis.combine(&x), base.manifold()))
}

/// Dense Riemannian Hessian acting on `vec(V)` for arbitrary `d x N` input.
///
/// Stiefel: `P_St ((Id_N (x) S^{-1}) H - sym(C^T g) (x) Id_d)` with
/// `P_St = (Id_N (x) (2 Id - C C^T S) - perm(C^T S (x) C)) / 2`.
/// Grassmann: `(Id_N (x) (Id - C C^T S) S^{-1}) H - g^T C (x) Id_d`.
pub fn extrinsic_hessian(cost: &dyn CostFunction, point: &ManifoldPoint) -> Result<Mat> {
    let (d, n) = (point.d(), point.n());
    let c = point.c();
    let s = point.metric().matrix();
    let s_inv = point.metric().inverse();
    let id_d = Mat::identity(d, d);
    let id_n = Mat::identity(n, n);
    let h = cost.euclidean_hessian_matrix(c)?;
    let egrad = cost.euclidean_gradient(c)?;
    let ct_g = c.transpose() * &egrad;
    let cc_s = c * c.transpose() * s;
    match point.manifold() {
        Manifold::Stiefel => {
            let inner = linalg::kron(&id_n, s_inv) * h - linalg::kron(&linalg::sym(&ct_g)?, &id_d);
            let proj = (linalg::kron(&id_n, &(&id_d * 2.0 - &cc_s))
                - linalg::perm_columns(&linalg::kron(&(c.transpose() * s), c), d, n)?)
                * 0.5;
            Ok(proj * inner)
        }
        Manifold::Grassmann => {
            let left = linalg::kron(&id_n, &((&id_d - &cc_s) * s_inv));
            Ok(left * h - linalg::kron(&ct_g.transpose(), &id_d))
        }
    }
}

/// Linearized tangency constraint: `h(C) vec(V) = 0` iff `V` is tangent.
///
/// Stiefel: `Id_N (x) C^T S + perm(C^T S (x) Id_N)`. Grassmann: `Id_N (x) C^T S`.
pub fn constraint_matrix(point: &ManifoldPoint) -> Result<Mat> {
    let (d, n) = (point.d(), point.n());
    let cts = point.c().transpose() * point.metric().matrix();
    let id_n = Mat::identity(n, n);
    let base = linalg::kron(&id_n, &cts);
    match point.manifold() {
        Manifold::Stiefel => Ok(base + linalg::perm_columns(&linalg::kron(&cts, &id_n), d, n)?),
        Manifold::Grassmann => Ok(base),
    }
}

/// Newton step from the stacked system `[Hess; h(C)] vec(V) = [-vec(grad); 0]`,
/// solved by least squares.
pub fn newton_step_extrinsic(cost: &dyn CostFunction, base: &ManifoldPoint) -> Result<TangentVector> {
    let (d, n) = (base.d(), base.n());
    let hess = extrinsic_hessian(cost, base)?;
    let h = constraint_matrix(base)?;
    let egrad = cost.euclidean_gradient(base.c())?;
    let grad = base.riemannian_gradient(&egrad)?;
    let m = d * n;
    let rows = m + h.nrows();
    let mut a = Mat::zeros(rows, m);
    a.rows_mut(0, m).copy_from(&hess);
    a.rows_mut(m, h.nrows()).copy_from(&h);
    let mut rhs = Vector::zeros(rows);
    rhs.rows_mut(0, m).copy_from(&(-linalg::vec(grad.matrix())));

    let (x, rank) = linalg::min_norm_solve(&a, &rhs, SINGULAR_RCOND)?;
    if rank < m {
        return Err(Error::Numerical(format!(
            "stacked Newton system has rank {rank} < {m}; Hessian is singular on the tangent space"
        )));
    }
    let residual = (&a * &x - &rhs).norm();
    if residual > CONSISTENCY_TOL * rhs.norm().max(1.0) {
        return Err(Error::Numerical(format!(
            "stacked Newton system is inconsistent (residual {residual:.3e})"
        )));
    }
    let v = linalg::unvec(&x, d, n)?;
    // Least squares leaves roundoff-level normal components; remove them.
    base.project(&v)
}
