use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::manifolds::{s_orthonormalize, Manifold, ManifoldPoint, FEASIBILITY_WARN_TOL};
use crate::solvers::{solve, SolverConfig, Status};

/// Largest principal angle (sine) below which two subspaces are the same critical point.
pub const SAME_POINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    ConvergedToReference { iterations: usize },
    ConvergedElsewhere { iterations: usize },
    Failed { status: Status },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ConvergedToReference { .. } => "converged_to_reference",
            Outcome::ConvergedElsewhere { .. } => "converged_elsewhere",
            Outcome::Failed { .. } => "failed",
        }
    }

    pub fn iterations(&self) -> Option<usize> {
        match *self {
            Outcome::ConvergedToReference { iterations } | Outcome::ConvergedElsewhere { iterations } => {
                Some(iterations)
            }
            Outcome::Failed { .. } => None,
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Outcome::ConvergedToReference { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodOptions {
    pub t_max: f64,
    pub t_step: f64,
    /// Seed of the tangent basis that supplies the directions.
    pub basis_seed: u64,
    /// Keep a seeded subsample of this many basis vectors (each used with both signs).
    pub max_directions: Option<usize>,
}

impl Default for NeighborhoodOptions {
    fn default() -> Self {
        Self {
            t_max: 1.0,
            t_step: 0.05,
            basis_seed: 0,
            max_directions: None,
        }
    }
}

impl NeighborhoodOptions {
    /// Grid points `t_k = k * t_step`, `k >= 1`, up to `t_max`, rounded to
    /// nine decimals so that e.g. `0.3` is not reported as `0.30000000000000004`.
    pub fn grid(&self) -> Vec<f64> {
        let count = (self.t_max / self.t_step + 1e-9).floor() as usize;
        (1..=count)
            .map(|k| (k as f64 * self.t_step * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    /// Index into the signed direction list: `2 i` is `+u_i`, `2 i + 1` is `-u_i`.
    pub direction: usize,
    pub t: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct NeighborhoodMap {
    pub reference: ManifoldPoint,
    /// Basis indices used, each contributing `+u_i` and `-u_i`.
    pub basis_indices: Vec<usize>,
    pub grid: Vec<f64>,
    /// Row-major over (direction, t).
    pub rows: Vec<OutcomeRow>,
    /// `R_j` per signed direction.
    pub radii: Vec<f64>,
}

impl NeighborhoodMap {
    pub fn direction_count(&self) -> usize {
        2 * self.basis_indices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiiSummary {
    pub r_min: f64,
    pub r_avg: f64,
    pub r_max: f64,
}

/// Largest grid `t` such that every grid point up to it reached the reference.
pub fn contiguous_radius(grid: &[f64], outcomes: &[Outcome]) -> f64 {
    grid.iter()
        .zip(outcomes)
        .take_while(|(_, o)| o.is_reference())
        .last()
        .map_or(0.0, |(&t, _)| t)
}

/// Runs the solver from `exp_{x*}(t v)` for every signed basis direction and
/// grid point, classifying where it ends up.
pub fn map_neighborhood(
    cost: &dyn CostFunction,
    config: &SolverConfig,
    reference: &ManifoldPoint,
    options: &NeighborhoodOptions,
) -> Result<NeighborhoodMap> {
    if !(options.t_step > 0.0) || !(options.t_max >= 0.0) {
        return Err(Error::Contract(format!(
            "need t_step > 0 and t_max >= 0, got t_step={}, t_max={}",
            options.t_step, options.t_max
        )));
    }
    let gr = reference.with_manifold(Manifold::Grassmann);
    let egrad = cost.euclidean_gradient(gr.c())?;
    let grad_norm = gr.metric().norm(gr.riemannian_gradient(&egrad)?.matrix());
    if !(grad_norm < config.grad_tol) {
        return Err(Error::Precondition(format!(
            "reference is not critical: gradient norm {grad_norm:.3e} >= {:.1e}",
            config.grad_tol
        )));
    }

    let basis = gr.tangent_basis(options.basis_seed)?;
    let basis_indices: Vec<usize> = match options.max_directions {
        Some(cap) if cap < basis.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(options.basis_seed);
            let mut picked = sample(&mut rng, basis.len(), cap).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..basis.len()).collect(),
    };
    let grid = options.grid();
    let jobs: Vec<(usize, usize)> = (0..2 * basis_indices.len())
        .flat_map(|dir| (0..grid.len()).map(move |k| (dir, k)))
        .collect();

    let rows = jobs
        .par_iter()
        .map(|&(dir, k)| -> Result<OutcomeRow> {
            let u = &basis.elements[basis_indices[dir / 2]];
            let sign = if dir % 2 == 0 { 1.0 } else { -1.0 };
            let t = grid[k];
            let v = gr.project_grassmann(&(u * (sign * t)))?;
            let outcome = match gr.exp(&v) {
                Ok(start) => classify(cost, config, &gr, &start)?,
                Err(_) => Outcome::Failed {
                    status: Status::NumericalFailure,
                },
            };
            Ok(OutcomeRow {
                direction: dir,
                t,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let radii = rows
        .chunks(grid.len().max(1))
        .map(|chunk| {
            let outcomes: Vec<Outcome> = chunk.iter().map(|r| r.outcome).collect();
            contiguous_radius(&grid, &outcomes)
        })
        .collect::<Vec<_>>();
    let radii = if grid.is_empty() {
        vec![0.0; 2 * basis_indices.len()]
    } else {
        radii
    };

    Ok(NeighborhoodMap {
        reference: reference.clone(),
        basis_indices,
        grid,
        rows,
        radii,
    })
}

fn classify(
    cost: &dyn CostFunction,
    config: &SolverConfig,
    reference: &ManifoldPoint,
    start: &ManifoldPoint,
) -> Result<Outcome> {
    let trace = solve(cost, start, config)?;
    if trace.status != Status::Converged {
        return Ok(Outcome::Failed {
            status: trace.status,
        });
    }
    let iterations = trace.n_iter();
    let mut c = trace.final_point;
    let violation = crate::manifolds::feasibility_violation(&c, cost.metric().matrix());
    if violation > FEASIBILITY_WARN_TOL {
        return Ok(Outcome::ConvergedElsewhere { iterations });
    }
    if violation > 0.0 {
        c = s_orthonormalize(&c, cost.metric())?;
    }
    if reference.subspace_distance(&c)? < SAME_POINT_TOL {
        Ok(Outcome::ConvergedToReference { iterations })
    } else {
        Ok(Outcome::ConvergedElsewhere { iterations })
    }
}

pub fn radii_summary(map: &NeighborhoodMap) -> Result<RadiiSummary> {
    summarize_radii(&map.radii)
}

pub fn summarize_radii(radii: &[f64]) -> Result<RadiiSummary> {
    if radii.is_empty() {
        return Err(Error::Contract("radii summary needs at least one direction".into()));
    }
    let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let r_avg = radii.iter().sum::<f64>() / radii.len() as f64;
    Ok(RadiiSummary {
        r_min,
        r_avg: r_avg.clamp(r_min, r_max),
        r_max,
    })
}

/// First quartile, median and third quartile (linear interpolation between order statistics).
pub fn quartiles(values: &[f64]) -> Option<[f64; 3]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some([at(0.25), at(0.5), at(0.75)])
}
