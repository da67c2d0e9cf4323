//! Effect of the eigenvalue cutoff in the truncated Stiefel method. A small
//! cutoff only removes the vertical null space; a large one also discards
//! genuine curvature and slows or breaks convergence.
//!
//! ```text
//! cargo run --release --example delta_ablation
//! ```

use std::sync::Arc;

use manifold_newton::costs::Brockett;
use manifold_newton::error::Result;
use manifold_newton::io::manifest::perturbed_minimum;
use manifold_newton::linalg;
use manifold_newton::manifolds::MetricMatrix;
use manifold_newton::solvers::{solve, Method, SolverConfig};

pub fn run() -> Result<()> {
    let deltas = [1e-8, 1e-4, 0.05, 0.3, 1.0];
    println!("{:<10} {}", "delta", "converged / iterations per problem");
    for &delta in &deltas {
        let mut cells = Vec::new();
        for k in 0..8u64 {
            // Small gaps put Hessian eigenvalues inside (0.1, 1).
            let eigs = [0.5, 0.8, 1.1 + 0.05 * k as f64, 1.6, 2.5, 3.0];
            let metric = Arc::new(MetricMatrix::new(linalg::random_spd(6, k))?);
            let cost = Brockett::with_spectrum(&eigs, metric, k)?;
            let x0 = perturbed_minimum(&cost, 2, 0.3, 40 + k)?;
            let mut cfg = SolverConfig::new(Method::MrnmSt);
            cfg.delta = delta;
            let trace = solve(&cost, &x0, &cfg)?;
            cells.push(if trace.converged() { trace.n_iter().to_string() } else { "-".into() });
        }
        println!("{delta:<10} {}", cells.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
