//! Newton-type optimization on the generalized Stiefel manifold
//! `{C : C^T S C = Id}` and on the Grassmannian of its column spaces.
//!
//! The crate provides the manifold geometry ([`manifolds`]), two cost
//! families ([`costs`]: the Brockett trace cost and closed-shell
//! Hartree-Fock), the solvers ([`solvers`]: Riemannian Newton on either
//! manifold, its spectrum-truncated Stiefel variant and Newton on the
//! Lagrangian), experiment drivers ([`analysis`]), file formats ([`io`]) and
//! the `manopt` command line ([`cli`]).
//!
//! ```
//! use std::sync::Arc;
//! use manifold_newton::costs::{Brockett, CostFunction};
//! use manifold_newton::io::manifest::perturbed_minimum;
//! use manifold_newton::manifolds::MetricMatrix;
//! use manifold_newton::solvers::{solve, Method, SolverConfig};
//!
//! let f = Brockett::with_spectrum(&[1.0, 2.0, 3.0, 4.0], Arc::new(MetricMatrix::identity(4)), 7)?;
//! // Newton converges to the nearest critical point, so start close to the minimum.
//! let x0 = perturbed_minimum(&f, 2, 0.1, 1)?;
//! let trace = solve(&f, &x0, &SolverConfig::new(Method::RnmGr))?;
//! assert!(trace.converged());
//! assert!((trace.final_value() - f.minimum(2)?).abs() < 1e-8);
//! # Ok::<(), manifold_newton::error::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod costs;
pub mod error;
pub mod io;
pub mod linalg;
pub mod manifolds;
pub mod solvers;
