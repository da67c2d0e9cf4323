//! Closed-shell Hartree-Fock for minimal-basis water from an integral file.
//!
//! Newton's method converges to whichever critical point is nearest. From the
//! core-Hamiltonian guess that is a saddle; starting after a few
//! fixed-point (Roothaan) sweeps it reaches the ground state. The inertia of
//! the Grassmann Hessian tells the two apart.
//!
//! ```text
//! cargo run --example hartree_fock_water [path/to/integrals.txt]
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use manifold_newton::costs::{CostFunction, HartreeFock};
use manifold_newton::error::Result;
use manifold_newton::io::read_integrals;
use manifold_newton::linalg::{self, Mat};
use manifold_newton::manifolds::{Manifold, ManifoldPoint};
use manifold_newton::solvers::{assemble_intrinsic, core_hamiltonian_guess, solve, Method, SolverConfig};

fn default_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/h2o_sto3g.txt")
}

/// Lowest `n` generalized eigenvectors of the Fock matrix at `c`.
fn roothaan_sweep(hf: &HartreeFock, c: &Mat, n: usize) -> Result<Mat> {
    let f = hf.fock(c)?.f;
    let eig = linalg::gen_eigen(&f, hf.integrals().overlap())?;
    // Generalized eigenvalues come back ascending.
    Ok(eig.eigenvectors.columns(0, n).clone_owned())
}

fn inertia(hf: &HartreeFock, c: &Mat) -> Result<(usize, usize)> {
    let point = ManifoldPoint::new(c.clone(), Arc::clone(hf.metric()), Manifold::Grassmann)?;
    let basis = point.tangent_basis(0)?;
    let h = assemble_intrinsic(hf, &point, &basis)?.symmetric_hessian();
    let eig = linalg::sym_eigen(&h)?;
    let pos = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
    Ok((pos, eig.eigenvalues.len() - pos))
}

pub fn run_with(path: PathBuf) -> Result<()> {
    let ints = Arc::new(read_integrals(&path)?);
    let hf = HartreeFock::new(Arc::clone(&ints))?;
    let n = ints.n_occ();
    let x0 = core_hamiltonian_guess(&ints, Arc::clone(hf.metric()))?;
    let cfg = SolverConfig::new(Method::RnmGr);

    let from_core = solve(&hf, &x0, &cfg)?;
    let (pos, neg) = inertia(&hf, &from_core.final_point)?;
    println!(
        "core guess:     E = {:.10} after {} steps; Hessian +{pos}/-{neg}",
        from_core.final_value() + hf.value_offset(),
        from_core.n_iter()
    );

    let mut c = x0.c().clone();
    for _ in 0..15 {
        c = roothaan_sweep(&hf, &c, n)?;
    }
    let start = ManifoldPoint::new(c, Arc::clone(hf.metric()), Manifold::Grassmann)?;
    let polished = solve(&hf, &start, &cfg)?;
    let (pos, neg) = inertia(&hf, &polished.final_point)?;
    println!(
        "after sweeps:   E = {:.10} after {} steps; Hessian +{pos}/-{neg}",
        polished.final_value() + hf.value_offset(),
        polished.n_iter()
    );
    Ok(())
}

pub fn run() -> Result<()> {
    run_with(default_path())
}

#[allow(dead_code)]
fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(default_path);
    if let Err(e) = run_with(path) {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
