//! Trace streams and the CSV tables the commands emit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::integrals::fmt_real;
use super::write_atomic;
use crate::analysis::{
    quartiles, NeighborhoodMap, RadiiSummary, SpectrumComparison, StatsRow,
};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::solvers::{Method, SolverTrace};

fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// JSON-lines rendering: a header object, one object per iterate, a footer.
pub fn trace_jsonl(problem_id: &str, trace: &SolverTrace) -> Result<String> {
    let header = json!({
        "type": "header",
        "problem_id": problem_id,
        "cost": trace.cost_label,
        "initial": trace.initial,
        "method": trace.config.method,
        "hessian_mode": trace.config.hessian_mode,
        "delta": trace.config.delta,
        "grad_tol": trace.config.grad_tol,
        "max_iter": trace.config.max_iter,
        "seed": trace.config.seed,
        "value_offset": trace.value_offset,
    });
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&header).map_err(json_err)?);
    out.push('\n');
    for r in &trace.records {
        let mut line = serde_json::to_value(r).map_err(json_err)?;
        line["type"] = json!("iteration");
        out.push_str(&serde_json::to_string(&line).map_err(json_err)?);
        out.push('\n');
    }
    let footer = json!({
        "type": "footer",
        "status": trace.status,
        "message": trace.message,
        "n_iter": trace.n_iter(),
        "final_value": trace.final_value() + trace.value_offset,
        "final_grad_norm": trace.final_grad_norm(),
        "wall_time_s": trace.wall_time_s,
        "final_point": rows_of(&trace.final_point),
        "final_eps": trace.final_eps.as_ref().map(rows_of),
    });
    out.push_str(&serde_json::to_string(&footer).map_err(json_err)?);
    out.push('\n');
    Ok(out)
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Numerical(format!("cannot serialize trace: {e}"))
}

pub fn write_trace(path: &Path, problem_id: &str, trace: &SolverTrace) -> Result<()> {
    write_atomic(path, trace_jsonl(problem_id, trace)?.as_bytes())
}

/// One row of the run summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub molecule_id: String,
    pub method: Method,
    pub hessian_mode: String,
    /// Only set for the truncated method.
    pub delta: Option<f64>,
    pub status: String,
    pub n_iter: usize,
    /// Includes any constant offset such as nuclear repulsion.
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub wall_time_s: f64,
}

impl SummaryRow {
    pub fn from_trace(problem_id: &str, trace: &SolverTrace) -> Self {
        Self {
            molecule_id: problem_id.to_string(),
            method: trace.config.method,
            hessian_mode: trace.config.hessian_mode.to_string(),
            delta: (trace.config.method == Method::MrnmSt).then_some(trace.config.delta),
            status: trace.status.to_string(),
            n_iter: trace.n_iter(),
            final_value: trace.final_value() + trace.value_offset,
            final_grad_norm: trace.final_grad_norm(),
            wall_time_s: trace.wall_time_s,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == "converged"
    }

    /// Series label for profiles: the method, plus delta when several cutoffs appear.
    pub fn series(&self, with_delta: bool) -> String {
        match (with_delta, self.delta) {
            (true, Some(d)) => format!("{}:delta={d}", self.method),
            _ => self.method.to_string(),
        }
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes a CSV with an explicit header even when there are no rows.
fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Ingestion(format!("csv: {e}"))
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "molecule_id",
    "method",
    "hessian_mode",
    "delta",
    "status",
    "n_iter",
    "final_value",
    "final_grad_norm",
    "wall_time_s",
];

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    if rows.is_empty() {
        return write_table(path, &SUMMARY_HEADER, &[]);
    }
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Ingestion(format!("{}: {e}", path.display()))))
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// `index, lambda_gr, lambda_st, overlap, residual_projection`; the Grassmann
/// columns are blank past `dim Gr` and the residual column before it.
pub fn write_spectrum(path: &Path, cmp: &SpectrumComparison) -> Result<()> {
    let dim_gr = cmp.eigs_gr.len();
    let rows: Vec<Vec<String>> = cmp
        .eigs_st
        .iter()
        .enumerate()
        .map(|(i, &st)| {
            vec![
                i.to_string(),
                opt(cmp.eigs_gr.get(i).copied()),
                fmt_real(st),
                opt(cmp.overlaps.get(i).copied()),
                opt(i.checked_sub(dim_gr).map(|k| cmp.residual_projections[k])),
            ]
        })
        .collect();
    write_table(
        path,
        &["index", "lambda_gr", "lambda_st", "overlap", "residual_projection"],
        &rows,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDRow {
    pub molecule_id: String,
    pub point: String,
    pub d: f64,
    pub dim_gr: usize,
    pub dim_st: usize,
}

/// Rows are sorted by id before writing.
pub fn write_spectrum_d(path: &Path, rows: &[SpectrumDRow]) -> Result<()> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.molecule_id.cmp(&b.molecule_id));
    if rows.is_empty() {
        return write_table(path, &["molecule_id", "point", "d", "dim_gr", "dim_st"], &[]);
    }
    write_atomic(path, &csv_bytes(&rows)?)
}

/// `direction, t, outcome, iterations`.
pub fn write_outcomes(path: &Path, map: &NeighborhoodMap) -> Result<()> {
    let rows: Vec<Vec<String>> = map
        .rows
        .iter()
        .map(|r| {
            vec![
                r.direction.to_string(),
                fmt_real(r.t),
                r.outcome.label().to_string(),
                r.outcome.iterations().map(|k| k.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    write_table(path, &["direction", "t", "outcome", "iterations"], &rows)
}

/// `direction, radius`.
pub fn write_direction_radii(path: &Path, map: &NeighborhoodMap) -> Result<()> {
    let rows: Vec<Vec<String>> = map
        .radii
        .iter()
        .enumerate()
        .map(|(j, r)| vec![j.to_string(), fmt_real(*r)])
        .collect();
    write_table(path, &["direction", "radius"], &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiRow {
    pub molecule_id: String,
    pub method: Method,
    pub r_min: f64,
    pub r_avg: f64,
    pub r_max: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub n_directions: usize,
}

impl RadiiRow {
    pub fn new(id: &str, method: Method, summary: RadiiSummary, radii: &[f64]) -> Self {
        let [q1, median, q3] = quartiles(radii).unwrap_or([0.0; 3]);
        Self {
            molecule_id: id.to_string(),
            method,
            r_min: summary.r_min,
            r_avg: summary.r_avg,
            r_max: summary.r_max,
            q1,
            median,
            q3,
            n_directions: radii.len(),
        }
    }
}

pub fn write_radii(path: &Path, rows: &[RadiiRow]) -> Result<()> {
    if rows.is_empty() {
        return write_table(
            path,
            &["molecule_id", "method", "r_min", "r_avg", "r_max", "q1", "median", "q3", "n_directions"],
            &[],
        );
    }
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn read_radii(path: &Path) -> Result<Vec<RadiiRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Ingestion(format!("{}: {e}", path.display()))))
        .collect()
}

/// `method, tau, rho` breakpoints for every series.
pub fn write_profile(path: &Path, profile: &crate::analysis::PerformanceProfile) -> Result<()> {
    let mut rows = Vec::new();
    for (s, name) in profile.methods.iter().enumerate() {
        for bp in profile.breakpoints(s) {
            rows.push(vec![name.clone(), fmt_real(bp.tau), fmt_real(bp.rho)]);
        }
    }
    write_table(path, &["method", "tau", "rho"], &rows)
}

pub fn write_statistics(path: &Path, rows: &[StatsRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.to_string(),
                opt(r.delta),
                r.converged.to_string(),
                r.total.to_string(),
                format!("{:.1}", 100.0 * r.fraction()),
                r.mean_iterations.map(|m| format!("{m:.3}")).unwrap_or_default(),
                r.to_string(),
            ]
        })
        .collect();
    write_table(
        path,
        &["method", "delta", "converged", "total", "percent", "mean_iterations", "formatted"],
        &body,
    )
}

/// Checks that every series covers the same problems; the error lists what is missing.
pub fn check_matching_ids(series: &BTreeMap<String, BTreeSet<String>>) -> Result<BTreeSet<String>> {
    let all: BTreeSet<String> = series.values().flatten().cloned().collect();
    let mut missing = Vec::new();
    for (name, ids) in series {
        let gaps: Vec<&str> = all.difference(ids).map(String::as_str).collect();
        if !gaps.is_empty() {
            missing.push(format!("{name} is missing {}", gaps.join(", ")));
        }
    }
    if missing.is_empty() {
        Ok(all)
    } else {
        Err(Error::Ingestion(format!(
            "problem ids differ across methods: {}",
            missing.join("; ")
        )))
    }
}
