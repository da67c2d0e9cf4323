//! TOML problem manifests.
//!
//! ```toml
//! [[problem]]
//! id = "lih"
//! integrals = "lih_sto3g.txt"        # relative to the manifest
//! guess = { kind = "core_hamiltonian" }
//!
//! [[problem]]
//! id = "brockett-6-2"
//! brockett = { d = 6, n = 2, seed = 1, metric = { kind = "random_spd", seed = 4 } }
//! guess = { kind = "perturbed_minimum", radius = 0.1, seed = 9 }
//! overrides = { max_iter = 100 }
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::integrals::{read_integrals, read_matrix};
use crate::costs::{Brockett, CostFunction, HartreeFock};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifolds::{s_orthonormalize, Manifold, ManifoldPoint, MetricMatrix};
use crate::solvers::{core_hamiltonian_guess, first_columns_guess, GuessKind, HessianMode, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Identity,
    /// `B B^T / d + Id` with seeded uniform `B`.
    RandomSpd { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrockettSpec {
    pub d: usize,
    pub n: usize,
    /// Generalized eigenvalues of `(A, S)`; defaults to `1, 2, ..., d`.
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default = "default_metric")]
    pub metric: MetricSpec,
    /// Seed of the random eigenvector rotation.
    #[serde(default)]
    pub seed: u64,
}

fn default_metric() -> MetricSpec {
    MetricSpec::Identity
}

impl BrockettSpec {
    pub fn build(&self) -> Result<Brockett> {
        if self.n == 0 || self.n > self.d {
            return Err(Error::Ingestion(format!(
                "brockett problem needs 1 <= n <= d, got n={}, d={}",
                self.n, self.d
            )));
        }
        let s = match self.metric {
            MetricSpec::Identity => Mat::identity(self.d, self.d),
            MetricSpec::RandomSpd { seed } => linalg::random_spd(self.d, seed),
        };
        let eigs = self
            .eigenvalues
            .clone()
            .unwrap_or_else(|| (1..=self.d).map(|k| k as f64).collect());
        if eigs.len() != self.d {
            return Err(Error::Ingestion(format!(
                "brockett problem lists {} eigenvalues for d={}",
                eigs.len(),
                self.d
            )));
        }
        Brockett::with_spectrum(&eigs, Arc::new(MetricMatrix::new(s)?), self.seed)
    }
}

/// Per-problem solver settings; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub grad_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub delta: Option<f64>,
    pub hessian: Option<HessianMode>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.grad_tol {
            cfg.grad_tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.hessian {
            cfg.hessian_mode = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub id: String,
    #[serde(default)]
    pub integrals: Option<PathBuf>,
    #[serde(default)]
    pub brockett: Option<BrockettSpec>,
    #[serde(default)]
    pub guess: Option<GuessKind>,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    problem: Vec<ProblemEntry>,
}

/// Validated manifest with every path resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemManifest {
    pub problems: Vec<ProblemEntry>,
}

/// A ready-to-solve problem.
#[derive(Clone)]
pub struct Problem {
    pub id: String,
    pub cost: Arc<dyn CostFunction>,
    pub x0: ManifoldPoint,
    pub overrides: Overrides,
    /// How `x0` was produced.
    pub initial: String,
    /// Set for synthetic problems, whose exact minimizer is known.
    pub brockett: Option<Arc<Brockett>>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("id", &self.id)
            .field("cost", &self.cost.label())
            .field("d", &self.x0.d())
            .field("n", &self.x0.n())
            .finish()
    }
}

impl Problem {
    /// Solver settings for `base` after applying this problem's overrides.
    pub fn config(&self, base: &SolverConfig) -> SolverConfig {
        let mut cfg = base.clone();
        self.overrides.apply(&mut cfg);
        cfg
    }
}

impl ProblemManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Ingestion(format!("cannot read manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Ingestion(msg) => Error::Ingestion(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses manifest text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let file: ManifestFile = toml::from_str(text).map_err(|e| Error::Ingestion(e.to_string()))?;
        if file.problem.is_empty() {
            return Err(Error::Ingestion("manifest lists no [[problem]] entries".into()));
        }
        let mut seen = HashSet::new();
        let mut problems = Vec::with_capacity(file.problem.len());
        for mut entry in file.problem {
            if entry.id.is_empty() || entry.id.contains(['/', '\\']) {
                return Err(Error::Ingestion(format!("invalid problem id `{}`", entry.id)));
            }
            if !seen.insert(entry.id.clone()) {
                return Err(Error::Ingestion(format!("duplicate problem id `{}`", entry.id)));
            }
            match (&mut entry.integrals, &entry.brockett) {
                (Some(p), None) => {
                    *p = resolve(base, p);
                    require_file(&entry.id, p)?;
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(Error::Ingestion(format!(
                        "problem `{}` needs exactly one of `integrals` or `brockett`",
                        entry.id
                    )))
                }
            }
            if let Some(GuessKind::UserFile { path, .. }) = &mut entry.guess {
                *path = resolve(base, path);
                require_file(&entry.id, path)?;
            }
            problems.push(entry);
        }
        Ok(Self { problems })
    }

    /// Builds every problem, keeping per-problem failures separate.
    pub fn build_all(&self) -> Vec<(String, Result<Problem>)> {
        self.problems
            .iter()
            .map(|e| (e.id.clone(), build_problem(e)))
            .collect()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn require_file(id: &str, p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Ingestion(format!(
            "problem `{id}` references missing file {}",
            p.display()
        )))
    }
}

pub fn build_problem(entry: &ProblemEntry) -> Result<Problem> {
    let (cost, brockett, ints): (Arc<dyn CostFunction>, _, _) = match (&entry.integrals, &entry.brockett) {
        (Some(path), None) => {
            let ints = Arc::new(read_integrals(path)?);
            (Arc::new(HartreeFock::new(Arc::clone(&ints))?), None, Some(ints))
        }
        (None, Some(spec)) => {
            let b = Arc::new(spec.build()?);
            (b.clone() as Arc<dyn CostFunction>, Some((b, spec.n)), None)
        }
        _ => {
            return Err(Error::Ingestion(format!(
                "problem `{}` needs exactly one of `integrals` or `brockett`",
                entry.id
            )))
        }
    };
    let metric = Arc::clone(cost.metric());
    let n = match (&ints, &brockett) {
        (Some(i), _) => i.n_occ(),
        (_, Some((_, n))) => *n,
        _ => unreachable!(),
    };
    let guess = entry.guess.clone().unwrap_or(match ints {
        Some(_) => GuessKind::CoreHamiltonian,
        None => GuessKind::FirstColumns,
    });
    let initial = guess.label();
    let x0 = match guess {
        GuessKind::CoreHamiltonian => match &ints {
            Some(i) => core_hamiltonian_guess(i, metric)?,
            None => {
                return Err(Error::Ingestion(format!(
                    "problem `{}`: core_hamiltonian guess needs integrals",
                    entry.id
                )))
            }
        },
        GuessKind::FirstColumns => first_columns_guess(metric, n)?,
        GuessKind::UserFile { path, orthonormalize } => {
            let c = read_matrix(&path)?;
            if c.shape() != (metric.dim(), n) {
                return Err(Error::Ingestion(format!(
                    "{}: guess is {}x{}, expected {}x{n}",
                    path.display(),
                    c.nrows(),
                    c.ncols(),
                    metric.dim()
                )));
            }
            let c = if orthonormalize { s_orthonormalize(&c, &metric)? } else { c };
            ManifoldPoint::new(c, metric, Manifold::Grassmann)
                .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?
        }
        GuessKind::PerturbedMinimum { radius, seed } => match &brockett {
            Some((b, n)) => perturbed_minimum(b, *n, radius, seed)?,
            None => {
                return Err(Error::Ingestion(format!(
                    "problem `{}`: perturbed_minimum guess needs a synthetic problem",
                    entry.id
                )))
            }
        },
    };
    Ok(Problem {
        id: entry.id.clone(),
        cost,
        x0,
        overrides: entry.overrides.clone(),
        initial,
        brockett: brockett.map(|(b, _)| b),
    })
}

/// `exp_{x*}(radius * u)` for the exact minimizer `x*` and a seeded unit
/// Grassmann direction `u`.
pub fn perturbed_minimum(cost: &Brockett, n: usize, radius: f64, seed: u64) -> Result<ManifoldPoint> {
    let xs = cost.minimizer(n, Manifold::Grassmann)?;
    let raw = linalg::random_matrix(xs.d(), n, seed);
    let u = xs.project_grassmann(&raw)?;
    let norm = xs.metric().norm(u.matrix());
    if norm == 0.0 || radius == 0.0 {
        return Ok(xs);
    }
    xs.exp(&u.scaled(radius / norm))
}
