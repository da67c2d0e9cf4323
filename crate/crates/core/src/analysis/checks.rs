//! Self-consistency checks of derivatives, Newton steps and geodesics.
//!
//! Each check returns the measured discrepancy; comparing it against a
//! tolerance is left to the caller, with the defaults below.

use serde::Serialize;

use crate::costs::CostFunction;
use crate::error::Result;
use crate::linalg::Mat;
use crate::manifolds::{Manifold, ManifoldPoint, TangentVector};
use crate::solvers::{newton_step_extrinsic, newton_step_intrinsic, riemannian_hessian};

/// Step of the central differences used for Euclidean derivative checks.
pub const EUCLIDEAN_FD_STEP: f64 = 1e-5;
pub const GRADIENT_FD_TOL: f64 = 1e-6;
pub const HESSIAN_FD_TOL: f64 = 1e-5;
/// Step of the second difference along geodesics.
pub const GEODESIC_FD_STEP: f64 = 1e-4;
pub const GEODESIC_FD_TOL: f64 = 1e-5;
pub const STEP_EQUIVALENCE_TOL: f64 = 1e-10;
pub const GEODESIC_AGREEMENT_TOL: f64 = 1e-8;

/// Largest entrywise gap between the Euclidean gradient and central differences of the value.
pub fn gradient_fd_error(cost: &dyn CostFunction, c: &Mat) -> Result<f64> {
    let g = cost.euclidean_gradient(c)?;
    let h = EUCLIDEAN_FD_STEP;
    let mut worst: f64 = 0.0;
    let mut x = c.clone();
    for idx in 0..c.len() {
        let orig = x[idx];
        x[idx] = orig + h;
        let fp = cost.value(&x)?;
        x[idx] = orig - h;
        let fm = cost.value(&x)?;
        x[idx] = orig;
        worst = worst.max(((fp - fm) / (2.0 * h) - g[idx]).abs());
    }
    Ok(worst)
}

/// Largest entrywise gap between the dense Euclidean Hessian and central
/// differences of the gradient.
pub fn hessian_fd_error(cost: &dyn CostFunction, c: &Mat) -> Result<f64> {
    let hess = cost.euclidean_hessian_matrix(c)?;
    let h = EUCLIDEAN_FD_STEP;
    let mut worst: f64 = 0.0;
    let mut x = c.clone();
    for col in 0..c.len() {
        let orig = x[col];
        x[col] = orig + h;
        let gp = cost.euclidean_gradient(&x)?;
        x[col] = orig - h;
        let gm = cost.euclidean_gradient(&x)?;
        x[col] = orig;
        let fd = (gp - gm) / (2.0 * h);
        for row in 0..c.len() {
            worst = worst.max((fd[row] - hess[(row, col)]).abs());
        }
    }
    Ok(worst)
}

/// One basis direction of the geodesic second-difference check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicCurvature {
    pub index: usize,
    /// `<v, Hess f (v)>`.
    pub exact: f64,
    /// `(f(exp(t v)) - 2 f(x) + f(exp(-t v))) / t^2`.
    pub finite_difference: f64,
}

impl GeodesicCurvature {
    pub fn error(&self) -> f64 {
        (self.exact - self.finite_difference).abs()
    }
}

/// Compares every diagonal entry of the intrinsic Hessian with the second
/// difference of the cost along the geodesic in that basis direction.
pub fn geodesic_curvatures(
    cost: &dyn CostFunction,
    point: &ManifoldPoint,
    seed: u64,
) -> Result<Vec<GeodesicCurvature>> {
    geodesic_curvatures_with_step(cost, point, seed, GEODESIC_FD_STEP)
}

/// [`geodesic_curvatures`] with an explicit step. Rounding in the second
/// difference grows like `eps |f| / t^2`, so large costs need a larger `t`.
pub fn geodesic_curvatures_with_step(
    cost: &dyn CostFunction,
    point: &ManifoldPoint,
    seed: u64,
    t: f64,
) -> Result<Vec<GeodesicCurvature>> {
    let basis = point.tangent_basis(seed)?;
    let egrad = cost.euclidean_gradient(point.c())?;
    let f0 = cost.value(point.c())?;
    basis
        .elements
        .iter()
        .enumerate()
        .map(|(index, v)| {
            let tv = point.tangent(v.clone())?;
            let hv = riemannian_hessian(cost, point, &egrad, v)?;
            let exact = point.metric().inner(v, hv.matrix());
            let fp = cost.value(point.exp(&tv.scaled(t))?.c())?;
            let fm = cost.value(point.exp(&tv.scaled(-t))?.c())?;
            Ok(GeodesicCurvature {
                index,
                exact,
                finite_difference: (fp - 2.0 * f0 + fm) / (t * t),
            })
        })
        .collect()
}

/// `||v_int - v_ext|| / ||v_int||` for the Newton steps at `point`.
pub fn step_discrepancy(cost: &dyn CostFunction, point: &ManifoldPoint, seed: u64) -> Result<f64> {
    let basis = point.tangent_basis(seed)?;
    let a = newton_step_intrinsic(cost, point, &basis)?;
    let b = newton_step_extrinsic(cost, point)?;
    Ok(relative_gap(&a, &b, point))
}

pub fn relative_gap(a: &TangentVector, b: &TangentVector, point: &ManifoldPoint) -> f64 {
    let metric = point.metric();
    let scale = metric.norm(a.matrix());
    let gap = metric.norm(&(a.matrix() - b.matrix()));
    if scale == 0.0 {
        gap
    } else {
        gap / scale
    }
}

/// Sine of the largest principal angle between the Stiefel and Grassmann
/// geodesic endpoints for a horizontal direction `eta`.
pub fn geodesic_disagreement(point: &ManifoldPoint, eta: &Mat) -> Result<f64> {
    let gr = point.with_manifold(Manifold::Grassmann);
    let st = point.with_manifold(Manifold::Stiefel);
    let eta_gr = gr.tangent(eta.clone())?;
    let eta_st = st.tangent(eta.clone())?;
    let a = gr.exp_grassmann(&eta_gr)?;
    let b = st.exp_stiefel(&eta_st)?;
    a.subspace_distance(b.c())
}
