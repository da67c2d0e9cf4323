use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Ratio `t / best`, e.g. iteration counts.
    LowerIsBetter,
    /// Inverted ratio `best / t`, e.g. convergence radii.
    HigherIsBetter,
}

/// What a metric value is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RatioBaseline {
    /// Best value among the methods on the same problem.
    #[default]
    PerProblem,
    /// Best value over every problem and method.
    Global,
}

/// Metric table: `values[p][s]` for problem `p` and method `s`; `None`
/// marks a run that produced no metric (for example, did not converge).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileInput {
    pub problems: Vec<String>,
    pub methods: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    pub methods: Vec<String>,
    pub orientation: Orientation,
    pub baseline: RatioBaseline,
    pub n_problems: usize,
    /// `ratios[s]`, sorted ascending; `f64::INFINITY` for missing metrics.
    pub ratios: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub tau: f64,
    pub rho: f64,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::LowerIsBetter => "lower_is_better",
            Orientation::HigherIsBetter => "higher_is_better",
        })
    }
}

fn ratio(value: f64, best: f64, orientation: Orientation) -> f64 {
    let r = match orientation {
        Orientation::LowerIsBetter => value / best,
        Orientation::HigherIsBetter => best / value,
    };
    if r.is_nan() || r < 0.0 {
        f64::INFINITY
    } else {
        r
    }
}

pub fn performance_profile(
    input: &ProfileInput,
    orientation: Orientation,
    baseline: RatioBaseline,
) -> Result<PerformanceProfile> {
    if input.problems.is_empty() || input.methods.is_empty() {
        return Err(Error::Contract(
            "a performance profile needs at least one problem and one method".into(),
        ));
    }
    if input.values.len() != input.problems.len()
        || input.values.iter().any(|row| row.len() != input.methods.len())
    {
        return Err(Error::Contract("metric table does not match problem/method lists".into()));
    }
    let better = |a: f64, b: f64| match orientation {
        Orientation::LowerIsBetter => a.min(b),
        Orientation::HigherIsBetter => a.max(b),
    };
    let best_of = |vals: &mut dyn Iterator<Item = f64>| vals.reduce(better);
    let global_best = best_of(&mut input.values.iter().flatten().flatten().copied());

    let mut ratios = vec![Vec::with_capacity(input.problems.len()); input.methods.len()];
    for row in &input.values {
        let best = match baseline {
            RatioBaseline::PerProblem => best_of(&mut row.iter().flatten().copied()),
            RatioBaseline::Global => global_best,
        };
        for (s, v) in row.iter().enumerate() {
            let r = match (v, best) {
                (Some(v), Some(best)) => ratio(*v, best, orientation),
                _ => f64::INFINITY,
            };
            ratios[s].push(r);
        }
    }
    for r in &mut ratios {
        r.sort_by(f64::total_cmp);
    }
    Ok(PerformanceProfile {
        methods: input.methods.clone(),
        orientation,
        baseline,
        n_problems: input.problems.len(),
        ratios,
    })
}

impl PerformanceProfile {
    /// `rho_s(tau)`: fraction of problems with ratio `<= tau`.
    pub fn rho(&self, method: usize, tau: f64) -> f64 {
        let count = self.ratios[method].partition_point(|&r| r <= tau);
        count as f64 / self.n_problems as f64
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }

    /// Step-function breakpoints: every distinct finite ratio and the value reached there.
    pub fn breakpoints(&self, method: usize) -> Vec<Breakpoint> {
        let taus: BTreeSet<u64> = self.ratios[method]
            .iter()
            .filter(|r| r.is_finite())
            .map(|r| r.to_bits())
            .collect();
        taus.into_iter()
            .map(f64::from_bits)
            .map(|tau| Breakpoint {
                tau,
                rho: self.rho(method, tau),
            })
            .collect()
    }

    /// Limit of `rho_s` as `tau -> infinity`.
    pub fn plateau(&self, method: usize) -> f64 {
        let finite = self.ratios[method].iter().filter(|r| r.is_finite()).count();
        finite as f64 / self.n_problems as f64
    }
}
