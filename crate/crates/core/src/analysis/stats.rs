use std::collections::BTreeMap;
use std::fmt;

use crate::solvers::{Method, SolverTrace, Status};

/// The parts of a run that the statistics table needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub method: Method,
    /// Truncation cutoff, reported only for `mrnm_st`.
    pub delta: Option<f64>,
    pub status: Status,
    pub n_iter: usize,
}

impl From<&SolverTrace> for RunOutcome {
    fn from(t: &SolverTrace) -> Self {
        Self {
            method: t.config.method,
            delta: (t.config.method == Method::MrnmSt).then_some(t.config.delta),
            status: t.status,
            n_iter: t.n_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub method: Method,
    pub delta: Option<f64>,
    pub converged: usize,
    pub total: usize,
    /// Mean iteration count over converged runs only.
    pub mean_iterations: Option<f64>,
}

impl StatsRow {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.converged as f64 / self.total as f64
        }
    }
}

impl fmt::Display for StatsRow {
    /// `92/125 (73.6%) 7.576`; the mean is `-` when nothing converged.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} ({:.1}%) ",
            self.converged,
            self.total,
            100.0 * self.fraction()
        )?;
        match self.mean_iterations {
            Some(m) => write!(f, "{m:.3}"),
            None => f.write_str("-"),
        }
    }
}

/// One row per method (and per delta for truncated runs), sorted by method then delta.
pub fn dataset_statistics(runs: &[RunOutcome]) -> Vec<StatsRow> {
    let mut groups: BTreeMap<(Method, Option<u64>), Vec<&RunOutcome>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.method, r.delta.map(f64::to_bits)))
            .or_default()
            .push(r);
    }
    let mut rows: Vec<StatsRow> = groups
        .into_iter()
        .map(|((method, delta), members)| {
            let conv: Vec<usize> = members
                .iter()
                .filter(|r| r.status == Status::Converged)
                .map(|r| r.n_iter)
                .collect();
            StatsRow {
                method,
                delta: delta.map(f64::from_bits),
                converged: conv.len(),
                total: members.len(),
                mean_iterations: (!conv.is_empty())
                    .then(|| conv.iter().sum::<usize>() as f64 / conv.len() as f64),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.delta.unwrap_or(0.0).total_cmp(&b.delta.unwrap_or(0.0)))
    });
    rows
}
