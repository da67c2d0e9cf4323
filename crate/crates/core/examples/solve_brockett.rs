//! Minimize a Brockett cost `tr(C^T A C)` with every solver and compare
//! against the exact minimum, the sum of the smallest generalized eigenvalues.
//!
//! ```text
//! cargo run --example solve_brockett
//! ```

use std::sync::Arc;

use manifold_newton::costs::{Brockett, CostFunction};
use manifold_newton::error::Result;
use manifold_newton::io::manifest::perturbed_minimum;
use manifold_newton::linalg;
use manifold_newton::manifolds::MetricMatrix;
use manifold_newton::solvers::{solve, HessianMode, Method, SolverConfig};

pub fn run() -> Result<()> {
    let (d, n) = (8, 3);
    let eigenvalues: Vec<f64> = (1..=d).map(|k| k as f64).collect();
    let metric = Arc::new(MetricMatrix::new(linalg::random_spd(d, 7))?);
    let cost = Brockett::with_spectrum(&eigenvalues, metric, 1)?;
    let exact = cost.minimum(n)?;
    println!("{} with N = {n}; exact minimum {exact}", cost.label());

    let start = perturbed_minimum(&cost, n, 0.3, 11)?;
    println!("{:<8} {:<10} {:>5} {:>14} {:>10}", "method", "hessian", "iters", "f - f*", "|grad|");
    for method in [Method::RnmGr, Method::RnmSt, Method::MrnmSt, Method::Nmlm] {
        for mode in [HessianMode::Intrinsic, HessianMode::Extrinsic] {
            if method == Method::MrnmSt && mode == HessianMode::Extrinsic {
                continue;
            }
            let mut cfg = SolverConfig::new(method);
            cfg.hessian_mode = mode;
            let trace = solve(&cost, &start, &cfg)?;
            println!(
                "{:<8} {:<10} {:>5} {:>14.3e} {:>10.2e}  {}",
                method.to_string(),
                mode.to_string(),
                trace.n_iter(),
                trace.final_value() - exact,
                trace.final_grad_norm(),
                trace.status
            );
        }
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
