use log::{error, info, warn};
use rayon::prelude::*;

use super::{final_point, load_problems, solve_problem, At, ExitCode, GlobalArgs, SpectrumArgs};
use crate::analysis::compare_spectra;
use crate::error::Result;
use crate::io::output::{write_spectrum, write_spectrum_d, SpectrumDRow};
use crate::io::tables::eigenvalue_table;
use crate::io::{write_atomic, Problem};
use crate::manifolds::{Manifold, ManifoldPoint};

fn evaluation_point(global: &GlobalArgs, args: &SpectrumArgs, p: &Problem) -> Result<Option<ManifoldPoint>> {
    match args.at {
        At::Initial => Ok(Some(p.x0.with_manifold(Manifold::Grassmann))),
        At::Solution => {
            let trace = solve_problem(p, &global.config(args.method, p))?;
            if trace.converged() {
                final_point(p, &trace).map(Some)
            } else {
                warn!("{}: {} did not converge ({}); no spectrum", p.id, args.method, trace.status);
                Ok(None)
            }
        }
    }
}

pub(super) fn run(global: &GlobalArgs, args: &SpectrumArgs) -> Result<ExitCode> {
    let (problems, mut code) = load_problems(&args.manifest)?;
    let point_label = match args.at {
        At::Initial => "initial",
        At::Solution => "solution",
    };
    let results: Vec<(ExitCode, Option<SpectrumDRow>)> = problems
        .par_iter()
        .map(|p| {
            let outcome = evaluation_point(global, args, p).and_then(|point| {
                let Some(point) = point else { return Ok(None) };
                let cmp = compare_spectra(p.cost.as_ref(), &point, global.seed())?;
                let dir = args.out.join("spectrum");
                write_spectrum(&dir.join(format!("{}.csv", p.id)), &cmp)?;
                write_atomic(&dir.join(format!("{}.tex", p.id)), eigenvalue_table(&cmp, 10).as_bytes())?;
                info!("{}: D = {:.3e}", p.id, cmp.d);
                Ok(Some(SpectrumDRow {
                    molecule_id: p.id.clone(),
                    point: point_label.into(),
                    d: cmp.d,
                    dim_gr: cmp.eigs_gr.len(),
                    dim_st: cmp.eigs_st.len(),
                }))
            });
            match outcome {
                Ok(row) => (ExitCode::Success, row),
                Err(e) => {
                    error!("{}: {e}", p.id);
                    (ExitCode::of(&e), None)
                }
            }
        })
        .collect();
    let mut rows = Vec::new();
    for (c, r) in results {
        code = code.worst(c);
        rows.extend(r);
    }
    write_spectrum_d(&args.out.join("spectrum_d.csv"), &rows)?;
    Ok(code)
}
