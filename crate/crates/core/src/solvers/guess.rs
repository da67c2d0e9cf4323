use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::costs::IntegralSet;
use crate::error::{dim_err, Result};
use crate::linalg::{self, Mat};
use crate::manifolds::{s_orthonormalize, Manifold, ManifoldPoint, MetricMatrix};

/// How a starting point is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuessKind {
    /// Lowest `N` generalized eigenvectors of `(h, S)`.
    CoreHamiltonian,
    /// First `N` coordinate vectors, S-orthonormalized.
    FirstColumns,
    /// A `d x N` matrix read from a whitespace-separated text file.
    UserFile {
        path: PathBuf,
        #[serde(default)]
        orthonormalize: bool,
    },
    /// Geodesic of the given length from the exact minimizer along a seeded
    /// random Grassmann direction (synthetic problems only).
    PerturbedMinimum { radius: f64, seed: u64 },
}

impl GuessKind {
    /// Short description recorded in trace headers.
    pub fn label(&self) -> String {
        match self {
            GuessKind::CoreHamiltonian => "core_hamiltonian".into(),
            GuessKind::FirstColumns => "first_columns".into(),
            GuessKind::UserFile { path, .. } => format!("user_file:{}", path.display()),
            GuessKind::PerturbedMinimum { radius, seed } => {
                format!("perturbed_minimum(radius={radius},seed={seed})")
            }
        }
    }
}

pub fn core_hamiltonian_guess(ints: &IntegralSet, metric: Arc<MetricMatrix>) -> Result<ManifoldPoint> {
    let eig = linalg::gen_eigen(ints.core_hamiltonian(), ints.overlap())?;
    let c = eig.eigenvectors.columns(0, ints.n_occ()).into_owned();
    ManifoldPoint::new(c, metric, Manifold::Grassmann)
}

pub fn first_columns_guess(metric: Arc<MetricMatrix>, n: usize) -> Result<ManifoldPoint> {
    let d = metric.dim();
    if n == 0 || n > d {
        return Err(dim_err(format!("need 1 <= N <= d, got N={n}, d={d}")));
    }
    let c = s_orthonormalize(&Mat::identity(d, d).columns(0, n).into_owned(), &metric)?;
    ManifoldPoint::new(c, metric, Manifold::Grassmann)
}
