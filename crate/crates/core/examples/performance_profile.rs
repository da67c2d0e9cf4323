//! Iteration-count performance profile over a family of synthetic problems.
//! `rho(tau)` is the share of problems a method solves within `tau` times the
//! best iteration count.
//!
//! ```text
//! cargo run --release --example performance_profile
//! ```

use std::sync::Arc;

use manifold_newton::analysis::{performance_profile, Orientation, ProfileInput, RatioBaseline};
use manifold_newton::costs::Brockett;
use manifold_newton::error::Result;
use manifold_newton::io::manifest::perturbed_minimum;
use manifold_newton::linalg;
use manifold_newton::manifolds::MetricMatrix;
use manifold_newton::solvers::{solve, Method, SolverConfig};

pub fn run() -> Result<()> {
    let methods = [Method::RnmGr, Method::RnmSt, Method::MrnmSt, Method::Nmlm];
    let mut problems = Vec::new();
    let mut values = Vec::new();
    for k in 0..12u64 {
        let (d, n) = (4 + (k % 4) as usize, 1 + (k % 3) as usize);
        let eigs: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 + 0.1 * k as f64).collect();
        let metric = Arc::new(MetricMatrix::new(linalg::random_spd(d, k))?);
        let cost = Brockett::with_spectrum(&eigs, metric, k)?;
        let x0 = perturbed_minimum(&cost, n, 0.4, 100 + k)?;
        let row = methods
            .iter()
            .map(|&m| {
                let trace = solve(&cost, &x0, &SolverConfig::new(m))?;
                Ok(trace.converged().then_some(trace.n_iter() as f64))
            })
            .collect::<Result<Vec<_>>>()?;
        problems.push(format!("brockett-{k}"));
        values.push(row);
    }
    let input = ProfileInput {
        problems,
        methods: methods.iter().map(|m| m.to_string()).collect(),
        values,
    };
    let profile = performance_profile(&input, Orientation::LowerIsBetter, RatioBaseline::PerProblem)?;
    for (s, name) in profile.methods.iter().enumerate() {
        let points: Vec<String> = profile
            .breakpoints(s)
            .iter()
            .map(|b| format!("({:.2}, {:.2})", b.tau, b.rho))
            .collect();
        println!("{name:<8} {}", points.join(" "));
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
