//! Consistency checks for a problem: derivatives against finite differences,
//! intrinsic against extrinsic Newton steps, and Hessian curvature against
//! second differences along geodesics. Also shows the integral text format
//! round trip.
//!
//! ```text
//! cargo run --example derivative_checks
//! ```

use std::path::Path;

use manifold_newton::cli::check_problem;
use manifold_newton::costs::IntegralSet;
use manifold_newton::error::Result;
use manifold_newton::io::{build_problem, format_integrals, parse_integrals, BrockettSpec, MetricSpec, ProblemEntry};

pub fn run() -> Result<()> {
    let ints = IntegralSet::random(4, 2, 3)?;
    let text = format_integrals(&ints);
    let back = parse_integrals(&text, Path::new("synthetic.txt"))?;
    println!(
        "integral text: {} lines, round trip exact: {}",
        text.lines().count(),
        back.g_dense() == ints.g_dense() && back.overlap() == ints.overlap()
    );

    let entry = ProblemEntry {
        id: "brockett-6-3".into(),
        integrals: None,
        brockett: Some(BrockettSpec {
            d: 6,
            n: 3,
            eigenvalues: None,
            metric: MetricSpec::RandomSpd { seed: 2 },
            seed: 5,
        }),
        guess: None,
        overrides: Default::default(),
    };
    let problem = build_problem(&entry)?;
    for row in check_problem(&problem, 0) {
        println!(
            "{:<28} {:>10.2e} <= {:<8.0e} {}",
            row.check,
            row.value,
            row.tolerance,
            if row.passed { "ok" } else { "FAIL" }
        );
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
