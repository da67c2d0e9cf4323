//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use manifold_newton::costs::{Brockett, CostFunction, HartreeFock, IntegralSet};
use manifold_newton::io::read_integrals;
use manifold_newton::linalg::{self, Mat};
use manifold_newton::manifolds::{s_orthonormalize, Manifold, ManifoldPoint, MetricMatrix};
use manifold_newton::solvers::core_hamiltonian_guess;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: [&str; 5] = ["h2_sto3g", "heh_plus_sto3g", "lih_sto3g", "h2o_sto3g", "h2o_631g"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixture_dir().join(format!("{name}.txt"))
}

pub fn reference() -> serde_json::Value {
    let text = std::fs::read_to_string(fixture_dir().join("reference.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Hartree-Fock cost for a bundled fixture and its core-Hamiltonian guess.
pub fn hartree_fock(name: &str) -> (HartreeFock, ManifoldPoint) {
    let ints = Arc::new(read_integrals(fixture_path(name)).unwrap());
    from_integrals(ints)
}

pub fn from_integrals(ints: Arc<IntegralSet>) -> (HartreeFock, ManifoldPoint) {
    let hf = HartreeFock::new(Arc::clone(&ints)).unwrap();
    let x0 = core_hamiltonian_guess(&ints, Arc::clone(hf.metric())).unwrap();
    (hf, x0)
}

/// Synthetic integrals with their core guess.
pub fn random_hartree_fock(d: usize, n_occ: usize, seed: u64) -> (HartreeFock, ManifoldPoint) {
    from_integrals(Arc::new(IntegralSet::random(d, n_occ, seed).unwrap()))
}

/// Sorted generalized eigenvalues drawn from `[0.5, 5)` with a random SPD metric.
pub fn random_brockett(d: usize, seed: u64) -> Brockett {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb10c);
    let mut eigs: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..5.0)).collect();
    eigs.sort_by(f64::total_cmp);
    let metric = Arc::new(MetricMatrix::new(linalg::random_spd(d, seed)).unwrap());
    Brockett::with_spectrum(&eigs, metric, seed).unwrap()
}

pub fn brockett_with(eigs: &[f64], seed: u64) -> Brockett {
    let metric = Arc::new(MetricMatrix::new(linalg::random_spd(eigs.len(), seed)).unwrap());
    Brockett::with_spectrum(eigs, metric, seed).unwrap()
}

/// S-orthonormalized random matrix.
pub fn random_point(cost: &dyn CostFunction, n: usize, seed: u64, manifold: Manifold) -> ManifoldPoint {
    let metric = Arc::clone(cost.metric());
    let c = s_orthonormalize(&linalg::random_matrix(cost.dim(), n, seed), &metric).unwrap();
    ManifoldPoint::new(c, metric, manifold).unwrap()
}

/// Sum of the `n` smallest generalized eigenvalues of `(a, s)`, computed
/// with nalgebra directly through `L^-1 A L^-T`.
pub fn brockett_minimum_oracle(a: &Mat, s: &Mat, n: usize) -> f64 {
    let l = s.clone().cholesky().unwrap().l();
    let linv = l.try_inverse().unwrap();
    let m = &linv * a * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e[..n].iter().sum()
}

pub fn temp_dir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}
