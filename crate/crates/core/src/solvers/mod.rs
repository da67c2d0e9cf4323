//! Pure Newton iterations: Riemannian Newton on the Grassmannian and the
//! Stiefel manifold, its spectrum-truncated variant, and Newton on the
//! Lagrangian of the constrained problem.

mod guess;
mod newton;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

pub use guess::{core_hamiltonian_guess, first_columns_guess, GuessKind};
pub use newton::{
    assemble_intrinsic, constraint_matrix, extrinsic_hessian, newton_step_extrinsic,
    newton_step_intrinsic, newton_step_truncated, riemannian_hessian, IntrinsicSystem,
    CONSISTENCY_TOL, SINGULAR_RCOND,
};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::manifolds::{feasibility_violation, Manifold, ManifoldPoint, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RnmGr,
    RnmSt,
    MrnmSt,
    Nmlm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::RnmGr, Method::RnmSt, Method::MrnmSt, Method::Nmlm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RnmGr => "rnm_gr",
            Method::RnmSt => "rnm_st",
            Method::MrnmSt => "mrnm_st",
            Method::Nmlm => "nmlm",
        }
    }

    /// Manifold the method iterates on; `None` for the Lagrangian method.
    pub fn manifold(self) -> Option<Manifold> {
        match self {
            Method::RnmGr => Some(Manifold::Grassmann),
            Method::RnmSt | Method::MrnmSt => Some(Manifold::Stiefel),
            Method::Nmlm => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Contract(format!("unknown method '{s}' (expected rnm_gr, rnm_st, mrnm_st or nmlm)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    #[default]
    Intrinsic,
    Extrinsic,
}

impl HessianMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HessianMode::Intrinsic => "intrinsic",
            HessianMode::Extrinsic => "extrinsic",
        }
    }
}

impl fmt::Display for HessianMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub hessian_mode: HessianMode,
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Eigenvalue cutoff for `mrnm_st`.
    pub delta: f64,
    /// Seed for the orthonormal complement inside tangent bases.
    pub seed: u64,
    pub record_spectrum: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            hessian_mode: HessianMode::Intrinsic,
            grad_tol: 1e-8,
            max_iter: 50,
            delta: 1e-8,
            seed: 0,
            record_spectrum: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Contract(format!("grad_tol must be > 0, got {}", self.grad_tol)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Contract(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.max_iter == 0 {
            return Err(Error::Contract("max_iter must be >= 1".into()));
        }
        if self.method == Method::MrnmSt && self.hessian_mode == HessianMode::Extrinsic {
            return Err(Error::Contract(
                "mrnm_st truncates the intrinsic spectrum and has no extrinsic mode".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub min: f64,
    pub max: f64,
    /// Eigenvalues `<= delta`.
    pub below_delta: usize,
}

impl SpectrumSummary {
    fn of(eigenvalues: &Vector, delta: f64) -> Option<Self> {
        if eigenvalues.is_empty() {
            return None;
        }
        Some(Self {
            min: eigenvalues.min(),
            max: eigenvalues.max(),
            below_delta: eigenvalues.iter().filter(|&&l| l <= delta).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Cost value without any reporting offset.
    pub value: f64,
    pub grad_norm: f64,
    /// `||C^T S C - Id||_F`.
    pub feasibility: f64,
    /// Norm of the step taken from this iterate, if one was taken.
    pub step_norm: Option<f64>,
    pub spectrum: Option<SpectrumSummary>,
    /// `||eps - eps^T||_F`, Lagrangian method only.
    pub eps_asymmetry: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub config: SolverConfig,
    pub cost_label: String,
    pub initial: String,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    /// Reason for a numerical failure.
    pub message: Option<String>,
    pub final_point: Mat,
    pub final_eps: Option<Mat>,
    pub value_offset: f64,
    pub wall_time_s: f64,
}

impl SolverTrace {
    /// Number of Newton steps taken.
    pub fn n_iter(&self) -> usize {
        self.records.iter().filter(|r| r.step_norm.is_some()).count()
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a trace always has its initial record")
    }

    pub fn final_value(&self) -> f64 {
        self.last().value
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.last().grad_norm
    }
}

/// Multiplier state of the Lagrangian method, `L(C, eps) = f(C) - tr(eps^T (C^T S C - Id))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub c: Mat,
    pub eps: Mat,
}

impl LagrangianState {
    pub fn eps_asymmetry(&self) -> f64 {
        (&self.eps - self.eps.transpose()).norm()
    }
}

/// Riemannian Newton iteration on the manifold selected by `config.method`.
///
/// The starting point is re-tagged to that manifold. Failures inside the
/// iteration end the trace with `Status::NumericalFailure`; only invalid
/// inputs return `Err`.
pub fn run_rnm(
    cost: &dyn CostFunction,
    x0: &ManifoldPoint,
    config: &SolverConfig,
) -> Result<SolverTrace> {
    run_rnm_with(cost, x0, config, |_, _, _| {})
}

/// Like [`run_rnm`], but calls `inspect(k, point, step)` for every step taken.
pub fn run_rnm_with(
    cost: &dyn CostFunction,
    x0: &ManifoldPoint,
    config: &SolverConfig,
    mut inspect: impl FnMut(usize, &ManifoldPoint, &TangentVector),
) -> Result<SolverTrace> {
    config.validate()?;
    let manifold = config.method.manifold().ok_or_else(|| {
        Error::Contract("run_rnm needs a Riemannian method; use run_nmlm for nmlm".into())
    })?;
    check_same_metric(cost, x0)?;
    let start = Instant::now();
    let mut x = x0.with_manifold(manifold);
    let mut records = Vec::new();
    let mut status = Status::MaxIter;
    let mut message = None;

    for k in 0..=config.max_iter {
        let egrad = cost.euclidean_gradient(x.c())?;
        let grad = x.riemannian_gradient(&egrad)?;
        let grad_norm = x.metric().norm(grad.matrix());
        let mut record = IterationRecord {
            iter: k,
            value: cost.value(x.c())?,
            grad_norm,
            feasibility: x.feasibility(),
            step_norm: None,
            spectrum: None,
            eps_asymmetry: None,
            elapsed_s: 0.0,
        };
        debug!(
            "{} iter {k}: f = {:.12e}, |grad| = {grad_norm:.3e}",
            config.method, record.value
        );
        if grad_norm < config.grad_tol {
            status = Status::Converged;
            record.elapsed_s = start.elapsed().as_secs_f64();
            records.push(record);
            break;
        }
        if k == config.max_iter || !grad_norm.is_finite() {
            if !grad_norm.is_finite() {
                status = Status::NumericalFailure;
                message = Some("gradient is not finite".into());
            }
            record.elapsed_s = start.elapsed().as_secs_f64();
            records.push(record);
            break;
        }

        let step = rnm_step(cost, &x, config, &mut record);
        let next = step.and_then(|v| {
            inspect(k, &x, &v);
            let norm = x.metric().norm(v.matrix());
            record.step_norm = Some(norm);
            x.exp(&v)
        });
        record.elapsed_s = start.elapsed().as_secs_f64();
        records.push(record);
        match next {
            Ok(p) => x = p,
            Err(e) => {
                status = Status::NumericalFailure;
                message = Some(e.to_string());
                break;
            }
        }
    }

    Ok(SolverTrace {
        config: config.clone(),
        cost_label: cost.label(),
        initial: String::new(),
        records,
        status,
        message,
        final_point: x.c().clone(),
        final_eps: None,
        value_offset: cost.value_offset(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn rnm_step(
    cost: &dyn CostFunction,
    x: &ManifoldPoint,
    config: &SolverConfig,
    record: &mut IterationRecord,
) -> Result<TangentVector> {
    let intrinsic = config.hessian_mode == HessianMode::Intrinsic || config.method == Method::MrnmSt;
    if !intrinsic && !config.record_spectrum {
        return newton_step_extrinsic(cost, x);
    }
    let basis = x.tangent_basis(config.seed)?;
    let system = assemble_intrinsic(cost, x, &basis)?;
    if config.record_spectrum {
        let eig = linalg::sym_eigen(&system.symmetric_hessian())?;
        record.spectrum = SpectrumSummary::of(&eig.eigenvalues, config.delta);
    }
    if !intrinsic {
        return newton_step_extrinsic(cost, x);
    }
    let coords = match config.method {
        Method::MrnmSt => system.solve_truncated(config.delta)?.0,
        _ => system.solve()?,
    };
    Ok(TangentVector::from_raw(basis.combine(&coords), x.manifold()))
}

fn check_same_metric(cost: &dyn CostFunction, x: &ManifoldPoint) -> Result<()> {
    let a = cost.metric().matrix();
    let b = x.metric().matrix();
    if a.shape() != b.shape() || (a - b).amax() > 0.0 {
        return Err(Error::Contract(
            "starting point and cost use different metric matrices".into(),
        ));
    }
    Ok(())
}

/// Gradient of the Lagrangian: `(grad f - S C (eps + eps^T), -(C^T S C - Id))`.
pub fn lagrangian_gradient(cost: &dyn CostFunction, state: &LagrangianState) -> Result<(Mat, Mat)> {
    let s = cost.metric().matrix();
    let n = state.c.ncols();
    let egrad = cost.euclidean_gradient(&state.c)?;
    let gc = egrad - s * &state.c * (&state.eps + state.eps.transpose());
    let ge = -(state.c.transpose() * s * &state.c - Mat::identity(n, n));
    Ok((gc, ge))
}

/// The symmetric KKT matrix
/// `[[H - (eps + eps^T) (x) S, -J^T], [-J, 0]]` with `J` the Jacobian of `vec(C^T S C)`.
pub fn lagrangian_hessian(cost: &dyn CostFunction, state: &LagrangianState) -> Result<Mat> {
    let (d, n) = state.c.shape();
    let s = cost.metric().matrix();
    let m = d * n;
    let h = cost.euclidean_hessian_matrix(&state.c)?
        - linalg::kron(&(&state.eps + state.eps.transpose()), s);
    let cts = state.c.transpose() * s;
    let id_n = Mat::identity(n, n);
    let j = linalg::kron(&id_n, &cts) + linalg::perm_columns(&linalg::kron(&cts, &id_n), d, n)?;
    let mut kkt = Mat::zeros(m + n * n, m + n * n);
    kkt.view_mut((0, 0), (m, m)).copy_from(&h);
    kkt.view_mut((0, m), (m, n * n)).copy_from(&(-j.transpose()));
    kkt.view_mut((m, 0), (n * n, m)).copy_from(&(-j));
    Ok(kkt)
}

/// Newton's method on the Lagrangian with additive updates of `(C, eps)`.
///
/// `eps0 = None` starts from `C0^T grad f(C0) / 2`, the multiplier that makes
/// the `C` block of the Lagrangian gradient vanish at a critical point. The
/// KKT matrix has the skew part of `eps` in its kernel for `N >= 2`; the
/// minimum-norm solution is used, so symmetric multipliers stay symmetric.
pub fn run_nmlm(
    cost: &dyn CostFunction,
    c0: &Mat,
    eps0: Option<Mat>,
    config: &SolverConfig,
) -> Result<SolverTrace> {
    config.validate()?;
    let (d, n) = c0.shape();
    if d != cost.dim() || n == 0 || n > d {
        return Err(Error::Dimension(format!(
            "starting matrix is {d}x{n}, cost dimension is {}",
            cost.dim()
        )));
    }
    let eps0 = match eps0 {
        Some(e) if e.shape() != (n, n) => {
            return Err(Error::Dimension(format!("eps0 must be {n}x{n}")));
        }
        Some(e) => e,
        None => c0.transpose() * cost.euclidean_gradient(c0)? * 0.5,
    };
    let start = Instant::now();
    let s = cost.metric().matrix();
    let m = d * n;
    let min_rank = m + n * (n + 1) / 2;
    let mut state = LagrangianState {
        c: c0.clone(),
        eps: eps0,
    };
    let mut records = Vec::new();
    let mut status = Status::MaxIter;
    let mut message = None;

    for k in 0..=config.max_iter {
        let (gc, ge) = lagrangian_gradient(cost, &state)?;
        let grad_norm = (gc.norm_squared() + ge.norm_squared()).sqrt();
        let mut record = IterationRecord {
            iter: k,
            value: cost.value(&state.c)?,
            grad_norm,
            feasibility: feasibility_violation(&state.c, s),
            step_norm: None,
            spectrum: None,
            eps_asymmetry: Some(state.eps_asymmetry()),
            elapsed_s: 0.0,
        };
        debug!("nmlm iter {k}: f = {:.12e}, |grad L| = {grad_norm:.3e}", record.value);
        if grad_norm < config.grad_tol {
            status = Status::Converged;
            record.elapsed_s = start.elapsed().as_secs_f64();
            records.push(record);
            break;
        }
        if k == config.max_iter || !grad_norm.is_finite() {
            if !grad_norm.is_finite() {
                status = Status::NumericalFailure;
                message = Some("Lagrangian gradient is not finite".into());
            }
            record.elapsed_s = start.elapsed().as_secs_f64();
            records.push(record);
            break;
        }

        let step = (|| -> Result<Vector> {
            let kkt = lagrangian_hessian(cost, &state)?;
            if config.record_spectrum {
                let eig = linalg::sym_eigen(&((&kkt + kkt.transpose()) * 0.5))?;
                record.spectrum = SpectrumSummary::of(&eig.eigenvalues, config.delta);
            }
            let mut rhs = Vector::zeros(m + n * n);
            rhs.rows_mut(0, m).copy_from(&(-linalg::vec(&gc)));
            rhs.rows_mut(m, n * n).copy_from(&(-linalg::vec(&ge)));
            let (x, rank) = linalg::min_norm_solve(&kkt, &rhs, SINGULAR_RCOND)?;
            if rank < min_rank {
                return Err(Error::Numerical(format!(
                    "KKT matrix has rank {rank} < {min_rank}"
                )));
            }
            Ok(x)
        })();
        match step {
            Ok(x) => {
                record.step_norm = Some(x.norm());
                state.c += linalg::unvec(&x.rows(0, m).into_owned(), d, n)?;
                state.eps += linalg::unvec(&x.rows(m, n * n).into_owned(), n, n)?;
                record.elapsed_s = start.elapsed().as_secs_f64();
                records.push(record);
            }
            Err(e) => {
                record.elapsed_s = start.elapsed().as_secs_f64();
                records.push(record);
                status = Status::NumericalFailure;
                message = Some(e.to_string());
                break;
            }
        }
    }

    Ok(SolverTrace {
        config: config.clone(),
        cost_label: cost.label(),
        initial: String::new(),
        records,
        status,
        message,
        final_point: state.c,
        final_eps: Some(state.eps),
        value_offset: cost.value_offset(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs whichever method `config` selects from a feasible start.
pub fn solve(cost: &dyn CostFunction, x0: &ManifoldPoint, config: &SolverConfig) -> Result<SolverTrace> {
    match config.method {
        Method::Nmlm => run_nmlm(cost, x0.c(), None, config),
        _ => run_rnm(cost, x0, config),
    }
}
