use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use super::{ExitCode, ProfileArgs, ProfileMetric};
use crate::analysis::{performance_profile, PerformanceProfile, ProfileInput};
use crate::error::{Error, Result};
use crate::io::integrals::fmt_real;
use crate::io::output::{check_matching_ids, read_radii, read_summary, write_profile};

/// `(problem id, series) -> metric`, `None` for runs without a metric.
type Table = BTreeMap<(String, String), Option<f64>>;

fn header(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    let h = r
        .headers()
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    Ok(h.iter().map(str::to_string).collect())
}

fn insert(table: &mut Table, path: &Path, id: String, series: String, value: Option<f64>) -> Result<()> {
    if table.insert((id.clone(), series.clone()), value).is_some() {
        return Err(Error::Ingestion(format!(
            "{}: duplicate row for problem `{id}` and method `{series}`",
            path.display()
        )));
    }
    Ok(())
}

fn collect(args: &ProfileArgs) -> Result<Table> {
    let mut table = Table::new();
    for path in &args.inputs {
        let cols = header(path)?;
        match args.metric {
            ProfileMetric::Iterations => {
                if !cols.iter().any(|c| c == "n_iter") {
                    return Err(Error::Ingestion(format!(
                        "{}: not a summary table (no n_iter column)",
                        path.display()
                    )));
                }
                let rows = read_summary(path)?;
                // Label by delta only when one method was run with several cutoffs.
                let mut deltas: BTreeMap<String, HashSet<u64>> = BTreeMap::new();
                for r in &rows {
                    if let Some(d) = r.delta {
                        deltas.entry(r.method.to_string()).or_default().insert(d.to_bits());
                    }
                }
                for r in rows {
                    let sweep = deltas.get(r.method.as_str()).is_some_and(|s| s.len() > 1);
                    let value = r.converged().then_some(r.n_iter as f64);
                    insert(&mut table, path, r.molecule_id.clone(), r.series(sweep), value)?;
                }
            }
            metric => {
                if !cols.iter().any(|c| c == "r_min") {
                    return Err(Error::Ingestion(format!(
                        "{}: not a radii table (no r_min column)",
                        path.display()
                    )));
                }
                for r in read_radii(path)? {
                    let v = match metric {
                        ProfileMetric::RMin => r.r_min,
                        ProfileMetric::RAvg => r.r_avg,
                        _ => r.r_max,
                    };
                    insert(&mut table, path, r.molecule_id, r.method.to_string(), Some(v))?;
                }
            }
        }
    }
    if table.is_empty() {
        return Err(Error::Ingestion("profile inputs contain no rows".into()));
    }
    Ok(table)
}

pub fn build_profile(args: &ProfileArgs) -> Result<PerformanceProfile> {
    let table = collect(args)?;
    let mut series: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (id, s) in table.keys() {
        series.entry(s.clone()).or_default().insert(id.clone());
    }
    let problems: Vec<String> = check_matching_ids(&series)?.into_iter().collect();
    let methods: Vec<String> = series.keys().cloned().collect();
    let values = problems
        .iter()
        .map(|id| methods.iter().map(|m| table[&(id.clone(), m.clone())]).collect())
        .collect();
    let input = ProfileInput {
        problems,
        methods,
        values,
    };
    performance_profile(&input, args.orientation(), args.baseline())
}

pub(super) fn run(args: &ProfileArgs) -> Result<ExitCode> {
    let profile = build_profile(args)?;
    match &args.out {
        Some(path) => write_profile(path, &profile)?,
        None => {
            println!("method,tau,rho");
            for (s, name) in profile.methods.iter().enumerate() {
                for bp in profile.breakpoints(s) {
                    println!("{name},{},{}", fmt_real(bp.tau), fmt_real(bp.rho));
                }
            }
        }
    }
    Ok(ExitCode::Success)
}
