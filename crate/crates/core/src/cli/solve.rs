use log::{error, info};
use rayon::prelude::*;

use super::{load_problems, solve_problem, ExitCode, GlobalArgs, SolveArgs};
use crate::analysis::{dataset_statistics, RunOutcome};
use crate::error::Result;
use crate::io::output::{write_statistics, write_summary, write_trace, SummaryRow};
use crate::io::Problem;
use crate::solvers::{Method, SolverConfig};

struct Job<'a> {
    problem: &'a Problem,
    config: SolverConfig,
    file_stem: String,
}

fn jobs<'a>(global: &GlobalArgs, args: &SolveArgs, problems: &'a [Problem]) -> Result<Vec<Job<'a>>> {
    let mut out = Vec::new();
    for p in problems {
        for &m in &args.methods {
            let deltas: Vec<Option<f64>> = match (&args.delta_sweep, m) {
                (Some(ds), Method::MrnmSt) => ds.iter().copied().map(Some).collect(),
                _ => vec![None],
            };
            for delta in deltas {
                let mut config = global.config(m, p);
                let mut file_stem = format!("{}__{m}", p.id);
                if let Some(d) = delta {
                    config.delta = d;
                    file_stem.push_str(&format!("__delta={d}"));
                }
                config.validate()?;
                out.push(Job {
                    problem: p,
                    config,
                    file_stem,
                });
            }
        }
    }
    Ok(out)
}

pub(super) fn run(global: &GlobalArgs, args: &SolveArgs) -> Result<ExitCode> {
    let (problems, mut code) = load_problems(&args.manifest)?;
    let jobs = match jobs(global, args, &problems) {
        Ok(j) => j,
        Err(e) => {
            error!("{e}");
            return Ok(ExitCode::Usage);
        }
    };
    let trace_dir = args.out.join("traces");
    let results: Vec<(ExitCode, Option<(SummaryRow, RunOutcome)>)> = jobs
        .par_iter()
        .map(|job| {
            let id = &job.problem.id;
            let trace = match solve_problem(job.problem, &job.config) {
                Ok(t) => t,
                Err(e) => {
                    error!("{id} {}: {e}", job.config.method);
                    return (ExitCode::of(&e), None);
                }
            };
            info!(
                "{id} {}: {} after {} iterations, |grad| = {:.3e}",
                job.config.method,
                trace.status,
                trace.n_iter(),
                trace.final_grad_norm()
            );
            let path = trace_dir.join(format!("{}.jsonl", job.file_stem));
            if let Err(e) = write_trace(&path, id, &trace) {
                error!("{}: {e}", path.display());
                return (ExitCode::of(&e), None);
            }
            (
                ExitCode::Success,
                Some((SummaryRow::from_trace(id, &trace), RunOutcome::from(&trace))),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for (c, r) in results {
        code = code.worst(c);
        if let Some((row, outcome)) = r {
            rows.push(row);
            outcomes.push(outcome);
        }
    }
    rows.sort_by(|a, b| {
        (&a.molecule_id, a.method)
            .cmp(&(&b.molecule_id, b.method))
            .then(a.delta.unwrap_or(0.0).total_cmp(&b.delta.unwrap_or(0.0)))
    });
    write_summary(&args.out.join("summary.csv"), &rows)?;
    let stats = dataset_statistics(&outcomes);
    write_statistics(&args.out.join("statistics.csv"), &stats)?;
    for s in &stats {
        match s.delta {
            Some(d) => println!("{} (delta={d:?}): {s}", s.method),
            None => println!("{}: {s}", s.method),
        }
    }
    Ok(code)
}
