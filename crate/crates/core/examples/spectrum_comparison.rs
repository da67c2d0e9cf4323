//! The Stiefel Hessian at a critical point is the Grassmann Hessian plus
//! `N(N-1)/2` zero eigenvalues from rotations inside the subspace. Away from
//! critical points the two spectra no longer line up.
//!
//! ```text
//! cargo run --example spectrum_comparison
//! ```

use std::sync::Arc;

use manifold_newton::analysis::compare_spectra;
use manifold_newton::costs::Brockett;
use manifold_newton::error::Result;
use manifold_newton::io::tables::eigenvalue_table;
use manifold_newton::linalg;
use manifold_newton::manifolds::{s_orthonormalize, Manifold, ManifoldPoint, MetricMatrix};

pub fn run() -> Result<()> {
    let (d, n) = (5, 2);
    let metric = Arc::new(MetricMatrix::new(linalg::random_spd(d, 3))?);
    let cost = Brockett::with_spectrum(&[0.5, 1.0, 2.0, 3.5, 4.0], Arc::clone(&metric), 2)?;

    let minimum = cost.minimizer(n, Manifold::Grassmann)?;
    let cmp = compare_spectra(&cost, &minimum, 0)?;
    println!("at the minimizer: D = {:.2e}", cmp.d);
    print!("{}", eigenvalue_table(&cmp, 8));
    let vertical: Vec<String> = cmp.residual_projections.iter().map(|w| format!("{w:.1e}")).collect();
    println!("horizontal weight of the extra Stiefel eigenvectors: {}", vertical.join(", "));

    let c = s_orthonormalize(&linalg::random_matrix(d, n, 5), &metric)?;
    let random = ManifoldPoint::new(c, metric, Manifold::Grassmann)?;
    let cmp = compare_spectra(&cost, &random, 0)?;
    println!("\nat a random point: D = {:.2e}", cmp.d);
    print!("{}", eigenvalue_table(&cmp, 8));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
