//! How far from a minimizer can each method start and still return to it?
//! Starts are placed along geodesics in every basis direction and both signs.
//!
//! ```text
//! cargo run --release --example neighborhood_map
//! ```

use std::sync::Arc;

use manifold_newton::analysis::{map_neighborhood, radii_summary, NeighborhoodOptions};
use manifold_newton::costs::Brockett;
use manifold_newton::error::Result;
use manifold_newton::io::tables::radii_table;
use manifold_newton::linalg;
use manifold_newton::manifolds::{Manifold, MetricMatrix};
use manifold_newton::solvers::{Method, SolverConfig};

pub fn run() -> Result<()> {
    let metric = Arc::new(MetricMatrix::new(linalg::random_spd(6, 4))?);
    let cost = Brockett::with_spectrum(&[1.0, 1.5, 2.0, 4.0, 5.0, 6.0], metric, 9)?;
    let reference = cost.minimizer(2, Manifold::Grassmann)?;
    let options = NeighborhoodOptions {
        t_max: 1.0,
        t_step: 0.1,
        basis_seed: 0,
        max_directions: Some(4),
    };
    let mut rows = Vec::new();
    for method in [Method::RnmGr, Method::MrnmSt, Method::Nmlm] {
        let map = map_neighborhood(&cost, &SolverConfig::new(method), &reference, &options)?;
        let radii: Vec<String> = map.radii.iter().map(|r| format!("{r:.1}")).collect();
        println!("{method:<8} radii per direction: {}", radii.join(" "));
        rows.push((method, radii_summary(&map)?));
    }
    println!("\nmethod & R_min & R_avg & R_max");
    print!("{}", radii_table(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
