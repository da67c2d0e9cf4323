use log::{error, info, warn};

use super::{final_point, load_problems, solve_problem, ExitCode, GlobalArgs, NeighborhoodArgs};
use crate::analysis::{map_neighborhood, radii_summary, NeighborhoodOptions};
use crate::error::Result;
use crate::io::output::{write_direction_radii, write_outcomes, write_radii, RadiiRow};
use crate::io::tables::radii_table;
use crate::io::{write_atomic, Problem};
use crate::manifolds::ManifoldPoint;
use crate::solvers::{Method, Status};

/// Log line for a problem without a converged reference solution.
pub fn skip_message(id: &str, primary: Status, fallback: Status) -> String {
    format!("skipping {id}: no converged reference (rnm_gr: {primary}, mrnm_st: {fallback})")
}

/// Reference critical point: the Grassmann solution, or the truncated
/// Stiefel one when that did not converge.
fn reference(global: &GlobalArgs, p: &Problem) -> Result<std::result::Result<ManifoldPoint, String>> {
    let primary = solve_problem(p, &global.config(Method::RnmGr, p))?;
    if primary.converged() {
        return final_point(p, &primary).map(Ok);
    }
    let fallback = solve_problem(p, &global.config(Method::MrnmSt, p))?;
    if fallback.converged() {
        return final_point(p, &fallback).map(Ok);
    }
    Ok(Err(skip_message(&p.id, primary.status, fallback.status)))
}

pub(super) fn run(global: &GlobalArgs, args: &NeighborhoodArgs) -> Result<ExitCode> {
    let (problems, mut code) = load_problems(&args.manifest)?;
    let options = NeighborhoodOptions {
        t_max: args.t_max,
        t_step: args.t_step,
        basis_seed: global.seed(),
        max_directions: args.max_directions,
    };
    let dir = args.out.join("neighborhood");
    let mut rows = Vec::new();
    for p in &problems {
        let xs = match reference(global, p) {
            Ok(Ok(x)) => x,
            Ok(Err(msg)) => {
                warn!("{msg}");
                continue;
            }
            Err(e) => {
                error!("{}: {e}", p.id);
                code = code.worst(ExitCode::of(&e));
                continue;
            }
        };
        let mut table = Vec::new();
        for &m in &args.methods {
            let result = map_neighborhood(p.cost.as_ref(), &global.config(m, p), &xs, &options).and_then(|map| {
                let stem = format!("{}__{m}", p.id);
                write_outcomes(&dir.join(format!("{stem}_outcomes.csv")), &map)?;
                write_direction_radii(&dir.join(format!("{stem}_radii.csv")), &map)?;
                let summary = radii_summary(&map)?;
                Ok((summary, RadiiRow::new(&p.id, m, summary, &map.radii)))
            });
            match result {
                Ok((summary, row)) => {
                    table.push((m, summary));
                    info!(
                        "{} {m}: R_min = {}, R_avg = {:.4}, R_max = {}",
                        p.id, row.r_min, row.r_avg, row.r_max
                    );
                    rows.push(row);
                }
                Err(e) => {
                    error!("{} {m}: {e}", p.id);
                    code = code.worst(ExitCode::of(&e));
                }
            }
        }
        if !table.is_empty() {
            let path = dir.join(format!("{}_radii.tex", p.id));
            if let Err(e) = write_atomic(&path, radii_table(&table).as_bytes()) {
                error!("{}: {e}", path.display());
                code = code.worst(ExitCode::of(&e));
            }
        }
    }
    rows.sort_by(|a, b| (&a.molecule_id, a.method).cmp(&(&b.molecule_id, b.method)));
    write_radii(&args.out.join("radii.csv"), &rows)?;
    Ok(code)
}
