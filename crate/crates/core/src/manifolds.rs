//! The generalized Stiefel manifold `St(d, N; S) = { C : C^T S C = Id }` and the
//! Grassmannian `Gr(N, d; S) = St(d, N; S) / O(N)`, both with the metric
//! `<A, B> = tr(A^T S B)`.
//!
//! A Grassmann point is represented by any Stiefel representative `C`; its
//! tangent vectors are the horizontal ones, `C^T S eta = 0`.

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{self, Mat, Vector};

/// Points whose constraint residual is within this bound are accepted silently.
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Above `FEASIBILITY_TOL` but below this bound a point is accepted with a warning.
pub const FEASIBILITY_WARN_TOL: f64 = 1e-8;
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Stiefel,
    Grassmann,
}

impl Manifold {
    /// `N(d - N)` for the Grassmannian, plus `N(N - 1)/2` for Stiefel.
    pub fn dimension(self, d: usize, n: usize) -> usize {
        let horizontal = n * (d - n);
        match self {
            Manifold::Grassmann => horizontal,
            Manifold::Stiefel => horizontal + n * (n.saturating_sub(1)) / 2,
        }
    }
}

/// SPD matrix defining the inner product, with its factorizations cached.
#[derive(Debug, Clone)]
pub struct MetricMatrix {
    s: Mat,
    inverse: Mat,
    /// Lower Cholesky factor, `S = L L^T`.
    lower: Mat,
    /// `O = L^{-T}`, satisfies `O^T S O = Id`.
    frame: Mat,
}

impl MetricMatrix {
    pub fn new(s: Mat) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(dim_err("metric matrix must be square"));
        }
        let asymmetry = (&s - s.transpose()).norm();
        if asymmetry > 1e-12 * s.norm() {
            return Err(Error::Contract(format!(
                "metric matrix is not symmetric (||S - S^T|| = {asymmetry:.3e})"
            )));
        }
        let lower = linalg::cholesky_lower(&s)?;
        let lower_inv = lower
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Contract("metric matrix Cholesky factor is singular".into()))?;
        let inverse = lower_inv.transpose() * &lower_inv;
        let frame = lower_inv.transpose();
        Ok(Self {
            s,
            inverse,
            lower,
            frame,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(Mat::identity(d, d)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.s
    }

    pub fn inverse(&self) -> &Mat {
        &self.inverse
    }

    pub fn cholesky_lower(&self) -> &Mat {
        &self.lower
    }

    pub fn frame(&self) -> &Mat {
        &self.frame
    }

    /// `tr(A^T S B)`.
    pub fn inner(&self, a: &Mat, b: &Mat) -> f64 {
        a.dot(&(&self.s * b))
    }

    pub fn norm(&self, a: &Mat) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }
}

/// `||C^T S C - Id||_F`.
pub fn feasibility_violation(c: &Mat, s: &Mat) -> f64 {
    let n = c.ncols();
    (c.transpose() * s * c - Mat::identity(n, n)).norm()
}

/// Returns `C (C^T S C)^{-1/2}`, which spans the same subspace and is S-orthonormal.
///
/// The Gram matrix squares the condition number of `C`, so a single pass
/// leaves an error of about `cond(C)^2 eps`. A second pass on the nearly
/// orthonormal result removes it.
pub fn s_orthonormalize(c: &Mat, metric: &MetricMatrix) -> Result<Mat> {
    let once = lowdin(c, metric)?;
    lowdin(&once, metric)
}

fn lowdin(c: &Mat, metric: &MetricMatrix) -> Result<Mat> {
    let gram = c.transpose() * metric.matrix() * c;
    let eig = linalg::sym_eigen(&gram)?;
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Numerical(
            "cannot S-orthonormalize rank-deficient columns".into(),
        ));
    }
    let inv_sqrt = Vector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()),
    );
    let root = &eig.eigenvectors * Mat::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    Ok(c * root)
}

/// A feasible `d x N` coefficient matrix on one of the two manifolds.
#[derive(Debug, Clone)]
pub struct ManifoldPoint {
    c: Mat,
    metric: Arc<MetricMatrix>,
    manifold: Manifold,
}

/// A tangent vector together with the manifold it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    v: Mat,
    manifold: Manifold,
}

impl TangentVector {
    pub fn matrix(&self) -> &Mat {
        &self.v
    }

    pub fn into_matrix(self) -> Mat {
        self.v
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub(crate) fn from_raw(v: Mat, manifold: Manifold) -> Self {
        Self { v, manifold }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            v: &self.v * t,
            manifold: self.manifold,
        }
    }
}

impl ManifoldPoint {
    pub fn new(c: Mat, metric: Arc<MetricMatrix>, manifold: Manifold) -> Result<Self> {
        if c.nrows() != metric.dim() {
            return Err(dim_err(format!(
                "point has {} rows but the metric is {}x{}",
                c.nrows(),
                metric.dim(),
                metric.dim()
            )));
        }
        if c.ncols() == 0 || c.ncols() > c.nrows() {
            return Err(dim_err(format!(
                "need 1 <= N <= d, got d={}, N={}",
                c.nrows(),
                c.ncols()
            )));
        }
        let violation = feasibility_violation(&c, metric.matrix());
        if violation > FEASIBILITY_WARN_TOL || !violation.is_finite() {
            return Err(Error::Contract(format!(
                "point is not feasible: ||C^T S C - Id|| = {violation:.3e}"
            )));
        }
        if violation > FEASIBILITY_TOL {
            warn!("point feasibility {violation:.3e} is inside the warning band");
        }
        Ok(Self {
            c,
            metric,
            manifold,
        })
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn metric(&self) -> &Arc<MetricMatrix> {
        &self.metric
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn d(&self) -> usize {
        self.c.nrows()
    }

    pub fn n(&self) -> usize {
        self.c.ncols()
    }

    pub fn dimension(&self) -> usize {
        self.manifold.dimension(self.d(), self.n())
    }

    /// Same representative viewed on the other manifold.
    pub fn with_manifold(&self, manifold: Manifold) -> Self {
        Self {
            c: self.c.clone(),
            metric: Arc::clone(&self.metric),
            manifold,
        }
    }

    pub fn feasibility(&self) -> f64 {
        feasibility_violation(&self.c, self.metric.matrix())
    }

    fn check_shape(&self, m: &Mat) -> Result<()> {
        if m.shape() != self.c.shape() {
            return Err(dim_err(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.d(),
                self.n(),
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }

    pub fn metric_inner(&self, a: &Mat, b: &Mat) -> Result<f64> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        Ok(self.metric.inner(a, b))
    }

    /// `C^T S M`.
    fn ct_s(&self, m: &Mat) -> Mat {
        self.c.transpose() * (self.metric.matrix() * m)
    }

    /// `M - C sym(C^T S M)`.
    pub fn project_stiefel(&self, m: &Mat) -> Result<TangentVector> {
        self.check_shape(m)?;
        let inner = linalg::sym(&self.ct_s(m))?;
        Ok(TangentVector::from_raw(
            m - &self.c * inner,
            Manifold::Stiefel,
        ))
    }

    /// `(Id - C C^T S) M`.
    pub fn project_grassmann(&self, m: &Mat) -> Result<TangentVector> {
        self.check_shape(m)?;
        Ok(TangentVector::from_raw(
            m - &self.c * self.ct_s(m),
            Manifold::Grassmann,
        ))
    }

    pub fn project(&self, m: &Mat) -> Result<TangentVector> {
        match self.manifold {
            Manifold::Stiefel => self.project_stiefel(m),
            Manifold::Grassmann => self.project_grassmann(m),
        }
    }

    /// Constraint residual of `V` for this point's tangent space.
    pub fn tangency_residual(&self, v: &Mat) -> f64 {
        let ctsv = self.ct_s(v);
        match self.manifold {
            Manifold::Stiefel => (&ctsv + ctsv.transpose()).norm(),
            Manifold::Grassmann => ctsv.norm(),
        }
    }

    /// Wraps `v` as a tangent vector, rejecting it if it is not tangent.
    pub fn tangent(&self, v: Mat) -> Result<TangentVector> {
        self.check_shape(&v)?;
        let residual = self.tangency_residual(&v);
        // Rounding in C^T S V grows with both factors.
        let scale = (self.c.transpose() * self.metric.matrix()).norm() * v.norm();
        let tol = TANGENCY_TOL * scale.max(1.0);
        if residual > tol || !residual.is_finite() {
            return Err(Error::Contract(format!(
                "matrix is not tangent to the {:?} manifold (residual {residual:.3e})",
                self.manifold
            )));
        }
        Ok(TangentVector::from_raw(v, self.manifold))
    }

    fn check_tangent(&self, v: &TangentVector) -> Result<()> {
        if v.manifold != self.manifold {
            return Err(Error::Contract(format!(
                "tangent vector built for {:?} used on {:?}",
                v.manifold, self.manifold
            )));
        }
        self.tangent(v.v.clone()).map(|_| ())
    }

    /// Riemannian gradient from the Euclidean gradient of an extension:
    /// the S-orthogonal projection of `S^{-1} egrad`.
    pub fn riemannian_gradient(&self, euclidean_grad: &Mat) -> Result<TangentVector> {
        self.check_shape(euclidean_grad)?;
        self.project(&(self.metric.inverse() * euclidean_grad))
    }

    /// Riemannian Hessian applied to `v`, given the Euclidean gradient at `C`
    /// and the Euclidean Hessian applied to `v`.
    ///
    /// Stiefel: `proj(S^{-1} Hv - V sym(C^T g))`.
    /// Grassmann: `proj(S^{-1} Hv) - V C^T g`.
    pub fn riemannian_hessian_apply(
        &self,
        euclidean_grad: &Mat,
        euclidean_hess_v: &Mat,
        v: &Mat,
    ) -> Result<TangentVector> {
        self.check_shape(euclidean_grad)?;
        self.check_shape(euclidean_hess_v)?;
        self.check_shape(v)?;
        let ct_g = self.c.transpose() * euclidean_grad;
        let s_inv_hv = self.metric.inverse() * euclidean_hess_v;
        match self.manifold {
            Manifold::Stiefel => self.project_stiefel(&(s_inv_hv - v * linalg::sym(&ct_g)?)),
            Manifold::Grassmann => {
                let p = self.project_grassmann(&s_inv_hv)?;
                Ok(TangentVector::from_raw(
                    p.into_matrix() - v * ct_g,
                    Manifold::Grassmann,
                ))
            }
        }
    }

    fn finish_exp(&self, c: Mat) -> Result<ManifoldPoint> {
        let violation = feasibility_violation(&c, self.metric.matrix());
        if violation > FEASIBILITY_WARN_TOL || !violation.is_finite() {
            return Err(Error::Numerical(format!(
                "exponential left the manifold (||C^T S C - Id|| = {violation:.3e}); step too long"
            )));
        }
        Ok(ManifoldPoint {
            c,
            metric: Arc::clone(&self.metric),
            manifold: self.manifold,
        })
    }

    /// Stiefel geodesic endpoint
    /// `[C V] expm([[C^T S V, -V^T S V], [Id, C^T S V]]) [Id; 0] expm(-C^T S V)`.
    pub fn exp_stiefel(&self, v: &TangentVector) -> Result<ManifoldPoint> {
        let v = &v.v;
        self.check_shape(v)?;
        let n = self.n();
        if v.norm() == 0.0 {
            return Ok(self.clone());
        }
        let a = self.ct_s(v);
        let q = v.transpose() * (self.metric.matrix() * v);
        let mut block = Mat::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&a);
        block.view_mut((0, n), (n, n)).copy_from(&(-q));
        block
            .view_mut((n, 0), (n, n))
            .copy_from(&Mat::identity(n, n));
        block.view_mut((n, n), (n, n)).copy_from(&a);
        let e = linalg::expm(&block)?;
        let mut cv = Mat::zeros(self.d(), 2 * n);
        cv.columns_mut(0, n).copy_from(&self.c);
        cv.columns_mut(n, n).copy_from(v);
        let c_new = cv * e.columns(0, n) * linalg::expm(&(-a))?;
        self.finish_exp(c_new)
    }

    /// Grassmann geodesic endpoint `C V cos(D) V^T + eta V sinc(D) V^T`, where
    /// `D^2` and `V` diagonalize the Gram matrix `eta^T S eta`.
    ///
    /// This equals the thin-SVD form `(C V cos(D) + O U sin(D)) V^T` with
    /// `O = L^{-T}` but never forms `U`. Left singular vectors of nearly equal
    /// small singular values come out of an SVD with errors that leak into
    /// `span(C)` and break feasibility; the Gram form is a matrix function
    /// of `eta^T S eta` and stays accurate.
    ///
    /// Singular values beyond `pi` are past the cut locus; the formula is
    /// still evaluated but the geodesic is no longer minimizing.
    pub fn exp_grassmann(&self, eta: &TangentVector) -> Result<ManifoldPoint> {
        let eta = &eta.v;
        self.check_shape(eta)?;
        if eta.norm() == 0.0 {
            return Ok(self.clone());
        }
        let gram = linalg::sym(&(eta.transpose() * (self.metric.matrix() * eta)))?;
        let eig = linalg::sym_eigen(&gram)?;
        let sigma = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let cos = Mat::from_diagonal(&sigma.map(f64::cos));
        let sinc = Mat::from_diagonal(&sigma.map(|s| if s == 0.0 { 1.0 } else { s.sin() / s }));
        let v = &eig.eigenvectors;
        let c_new = (&self.c * v * cos + eta * v * sinc) * v.transpose();
        self.finish_exp(c_new)
    }

    /// Exponential map of this point's manifold; `v` must be tangent.
    pub fn exp(&self, v: &TangentVector) -> Result<ManifoldPoint> {
        self.check_tangent(v)?;
        match self.manifold {
            Manifold::Stiefel => self.exp_stiefel(v),
            Manifold::Grassmann => self.exp_grassmann(v),
        }
    }

    /// Orthonormal basis of the tangent space at this point.
    pub fn tangent_basis(&self, seed: u64) -> Result<TangentBasis> {
        TangentBasis::build(self, seed)
    }

    /// Sine of the largest principal angle between the column spaces of this
    /// point and `other`, measured in the S-metric. Both must be S-orthonormal.
    pub fn subspace_distance(&self, other: &Mat) -> Result<f64> {
        self.check_shape(other)?;
        let residual = other - &self.c * self.ct_s(other);
        let whitened = self.metric.cholesky_lower().transpose() * residual;
        let svd = linalg::thin_svd(&whitened)?;
        Ok(svd.singular_values.max().min(1.0))
    }
}

/// S-orthonormal basis of a tangent space, as `d x N` matrices.
///
/// Stiefel bases start with the vertical block `C asym(sqrt(2) E_ij)`, i > j,
/// enumerated with `j` outer and `i` inner. Both manifolds then list the
/// horizontal block `C_perp E_kl` with `k` (row) running fastest.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    pub manifold: Manifold,
    pub elements: Vec<Mat>,
    /// Number of leading vertical elements (zero for the Grassmannian).
    pub vertical_dim: usize,
    pub c_perp: Mat,
    pub seed: u64,
    metric: Arc<MetricMatrix>,
}

impl TangentBasis {
    pub fn build(point: &ManifoldPoint, seed: u64) -> Result<Self> {
        let (d, n) = (point.d(), point.n());
        let c_perp = linalg::s_orthonormal_complement(point.c(), point.metric().matrix(), seed)?;
        let mut elements = Vec::with_capacity(point.dimension());
        let mut vertical_dim = 0;
        if point.manifold() == Manifold::Stiefel {
            let w = std::f64::consts::FRAC_1_SQRT_2;
            for j in 0..n {
                for i in (j + 1)..n {
                    let mut nu = Mat::zeros(n, n);
                    nu[(i, j)] = w;
                    nu[(j, i)] = -w;
                    elements.push(point.c() * nu);
                    vertical_dim += 1;
                }
            }
        }
        for l in 0..n {
            for k in 0..(d - n) {
                let mut e = Mat::zeros(d, n);
                e.set_column(l, &c_perp.column(k));
                elements.push(e);
            }
        }
        Ok(Self {
            manifold: point.manifold(),
            elements,
            vertical_dim,
            c_perp,
            seed,
            metric: Arc::clone(point.metric()),
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `<v, b_i>` for every basis element.
    pub fn coordinates(&self, v: &Mat) -> Vector {
        let sv = self.metric.matrix() * v;
        Vector::from_iterator(self.len(), self.elements.iter().map(|b| b.dot(&sv)))
    }

    /// `sum_i x_i b_i`.
    pub fn combine(&self, x: &Vector) -> Mat {
        let (d, n) = self.elements.first().map(|e| e.shape()).unwrap_or((0, 0));
        let mut out = Mat::zeros(d, n);
        for (b, &coef) in self.elements.iter().zip(x.iter()) {
            out += b * coef;
        }
        out
    }

    pub fn gram(&self) -> Mat {
        let m = self.len();
        Mat::from_fn(m, m, |i, j| self.metric.inner(&self.elements[i], &self.elements[j]))
    }
}
