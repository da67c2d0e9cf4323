use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use super::{load_problems, CheckArgs, ExitCode, GlobalArgs};
use crate::analysis::checks::*;
use crate::error::{Error, Result};
use crate::io::Problem;
use crate::linalg;
use crate::manifolds::{Manifold, FEASIBILITY_TOL};

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub molecule_id: String,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn row(id: &str, check: &str, value: Result<f64>, tolerance: f64) -> CheckRow {
    let value = value.unwrap_or_else(|e| {
        error!("{id} {check}: {e}");
        f64::NAN
    });
    CheckRow {
        molecule_id: id.into(),
        check: check.into(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn max_curvature_error(p: &Problem, m: Manifold, seed: u64) -> Result<f64> {
    let g = geodesic_curvatures(p.cost.as_ref(), &p.x0.with_manifold(m), seed)?;
    Ok(g.iter().map(GeodesicCurvature::error).fold(0.0, f64::max))
}

/// Every invariant check at the problem's starting point.
pub fn check_problem(p: &Problem, seed: u64) -> Vec<CheckRow> {
    let id = p.id.as_str();
    let cost = p.cost.as_ref();
    let gr = p.x0.with_manifold(Manifold::Grassmann);
    let st = p.x0.with_manifold(Manifold::Stiefel);
    let eta = gr
        .project_grassmann(&linalg::random_matrix(gr.d(), gr.n(), seed ^ 0x5eed))
        .map(|t| t.into_matrix());
    vec![
        row(id, "feasibility", Ok(p.x0.feasibility()), FEASIBILITY_TOL),
        row(id, "gradient_fd", gradient_fd_error(cost, p.x0.c()), GRADIENT_FD_TOL),
        row(id, "hessian_fd", hessian_fd_error(cost, p.x0.c()), HESSIAN_FD_TOL),
        row(
            id,
            "geodesic_fd_grassmann",
            max_curvature_error(p, Manifold::Grassmann, seed),
            GEODESIC_FD_TOL,
        ),
        row(
            id,
            "geodesic_fd_stiefel",
            max_curvature_error(p, Manifold::Stiefel, seed),
            GEODESIC_FD_TOL,
        ),
        row(id, "step_equivalence_grassmann", step_discrepancy(cost, &gr, seed), STEP_EQUIVALENCE_TOL),
        row(id, "step_equivalence_stiefel", step_discrepancy(cost, &st, seed), STEP_EQUIVALENCE_TOL),
        row(
            id,
            "geodesic_agreement",
            eta.and_then(|e| geodesic_disagreement(&gr, &e)),
            GEODESIC_AGREEMENT_TOL,
        ),
    ]
}

pub(super) fn run(global: &GlobalArgs, args: &CheckArgs) -> Result<ExitCode> {
    let (problems, code) = load_problems(&args.manifest)?;
    let rows: Vec<CheckRow> = problems
        .par_iter()
        .flat_map_iter(|p| check_problem(p, global.seed()))
        .collect();
    println!("{:<24} {:<28} {:>12} {:>10}  result", "problem", "check", "value", "tol");
    for r in &rows {
        println!(
            "{:<24} {:<28} {:>12.3e} {:>10.0e}  {}",
            r.molecule_id,
            r.check,
            r.value,
            r.tolerance,
            if r.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r).map_err(|e| Error::Ingestion(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        crate::io::write_atomic(path, &bytes)?;
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    info!("{} checks, {failed} failed", rows.len());
    Ok(if failed > 0 { code.worst(ExitCode::Numerical) } else { code })
}
