//! Hartree-Fock energies on the bundled molecular fixtures, checked against
//! the stored reference energies and a plain Roothaan iteration written here.

mod common;

use manifold_newton::costs::{CostFunction, HartreeFock};
use manifold_newton::linalg::Mat;
use manifold_newton::manifolds::{Manifold, ManifoldPoint};
use manifold_newton::solvers::{assemble_intrinsic, solve, Method, SolverConfig};

const ENERGY_TOL: f64 = 1e-8;

fn reference_value(name: &str, key: &str) -> f64 {
    common::reference()[name][key].as_f64().unwrap()
}

/// `F = h + sum_kl P_kl (2 (ij|kl) - (ik|jl))` from the chemists' tensor.
fn oracle_fock(hf: &HartreeFock, c: &Mat) -> Mat {
    let ints = hf.integrals();
    let d = ints.d();
    let chem = ints.chemists();
    let at = |i: usize, j: usize, k: usize, l: usize| chem[((i * d + j) * d + k) * d + l];
    let p = c * c.transpose();
    Mat::from_fn(d, d, |i, j| {
        let mut acc = ints.core_hamiltonian()[(i, j)];
        for k in 0..d {
            for l in 0..d {
                acc += p[(k, l)] * (2.0 * at(i, j, k, l) - at(i, k, j, l));
            }
        }
        acc
    })
}

/// Lowest `n` generalized eigenvectors of `(f, s)`, S-orthonormal.
fn aufbau(f: &Mat, s: &Mat, n: usize) -> Mat {
    let l = s.clone().cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let m = &linv * f * linv.transpose();
    let eig = ((&m + m.transpose()) * 0.5).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let y = Mat::from_fn(f.nrows(), n, |i, j| eig.eigenvectors[(i, order[j])]);
    linv.transpose() * y
}

/// Roothaan iterations from the core Hamiltonian until the density settles.
fn roothaan(hf: &HartreeFock, n: usize, tol: f64) -> Mat {
    let s = hf.integrals().overlap().clone();
    let mut c = aufbau(hf.integrals().core_hamiltonian(), &s, n);
    for _ in 0..500 {
        let next = aufbau(&oracle_fock(hf, &c), &s, n);
        let change = (&next * next.transpose() - &c * c.transpose()).amax();
        c = next;
        if change < tol {
            return c;
        }
    }
    panic!("Roothaan iteration did not settle");
}

fn oracle_energy(hf: &HartreeFock, c: &Mat) -> f64 {
    let p = c * c.transpose();
    p.dot(&(hf.integrals().core_hamiltonian() + oracle_fock(hf, c)))
}

#[test]
fn core_guess_energies_match_reference() {
    for name in common::FIXTURES {
        let (hf, x0) = common::hartree_fock(name);
        let e = hf.value(x0.c()).unwrap();
        let want = reference_value(name, "core_guess_e_elec");
        assert!((e - want).abs() < ENERGY_TOL * want.abs().max(1.0), "{name}: {e} vs {want}");
        assert!((hf.value_offset() - reference_value(name, "e_nuc")).abs() < 1e-12);
    }
}

#[test]
fn fock_and_energy_agree_with_the_oracle() {
    for name in common::FIXTURES {
        let (hf, x0) = common::hartree_fock(name);
        let c = x0.c();
        let f = hf.fock(c).unwrap().f;
        assert!((&f - oracle_fock(&hf, c)).amax() < 1e-12, "{name}");
        let e = hf.value(c).unwrap();
        assert!((e - oracle_energy(&hf, c)).abs() < 1e-10 * e.abs().max(1.0), "{name}");
    }
}

#[test]
fn roothaan_oracle_reproduces_reference_energies() {
    for name in common::FIXTURES {
        let (hf, x0) = common::hartree_fock(name);
        let c = roothaan(&hf, x0.n(), 1e-11);
        let e = oracle_energy(&hf, &c);
        let want = reference_value(name, "rhf_e_elec");
        assert!((e - want).abs() < ENERGY_TOL * want.abs(), "{name}: {e} vs {want}");
    }
}

/// Newton polishing of a loose Roothaan point lands on the reference minimum.
#[test]
fn newton_methods_reach_reference_minimum() {
    for name in common::FIXTURES {
        let (hf, x0) = common::hartree_fock(name);
        let n = x0.n();
        let start = roothaan(&hf, n, 1e-3);
        let point = ManifoldPoint::new(start, hf.metric().clone(), Manifold::Grassmann).unwrap();
        let mut methods = vec![Method::RnmGr, Method::MrnmSt];
        // With N >= 2 the plain Stiefel Hessian is singular at critical points.
        if n == 1 {
            methods.push(Method::RnmSt);
        }
        for m in methods {
            let trace = solve(&hf, &point, &SolverConfig::new(m)).unwrap();
            assert!(trace.converged(), "{name} {m}: {:?}", trace.status);
            let total = trace.final_value() + trace.value_offset;
            let want = reference_value(name, "rhf_e_tot");
            assert!((total - want).abs() < ENERGY_TOL * want.abs(), "{name} {m}: {total} vs {want}");
        }
    }
}

#[test]
fn small_molecules_converge_from_core_guess() {
    for name in ["h2_sto3g", "heh_plus_sto3g", "lih_sto3g"] {
        let (hf, x0) = common::hartree_fock(name);
        let trace = solve(&hf, &x0, &SolverConfig::new(Method::RnmGr)).unwrap();
        assert!(trace.converged(), "{name}");
        let want = reference_value(name, "rhf_e_elec");
        assert!((trace.final_value() - want).abs() < ENERGY_TOL * want.abs(), "{name}");
    }
}

/// Newton's method is attracted to any critical point. From the core guess
/// of minimal-basis water it stops at a saddle above the ground state.
#[test]
fn water_core_guess_converges_to_a_saddle() {
    let (hf, x0) = common::hartree_fock("h2o_sto3g");
    let trace = solve(&hf, &x0, &SolverConfig::new(Method::RnmGr)).unwrap();
    assert!(trace.converged());
    let total = trace.final_value() + trace.value_offset;
    assert!(total > reference_value("h2o_sto3g", "rhf_e_tot") + 1.0);
    let point = ManifoldPoint::new(trace.final_point.clone(), hf.metric().clone(), Manifold::Grassmann).unwrap();
    let basis = point.tangent_basis(0).unwrap();
    let h = assemble_intrinsic(&hf, &point, &basis).unwrap().symmetric_hessian();
    let negative = h.symmetric_eigen().eigenvalues.iter().filter(|&&l| l < -1e-6).count();
    assert!(negative > 0);
}

#[test]
fn chemists_tensor_has_eightfold_symmetry() {
    let mut sets: Vec<HartreeFock> = (0..3).map(|seed| common::random_hartree_fock(4, 2, seed).0).collect();
    sets.push(common::hartree_fock("lih_sto3g").0);
    for hf in &sets {
        let d = hf.dim();
        let chem = hf.integrals().chemists();
        let at = |i: usize, j: usize, k: usize, l: usize| chem[((i * d + j) * d + k) * d + l];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = at(i, j, k, l);
                        for w in [at(j, i, k, l), at(i, j, l, k), at(k, l, i, j), at(l, k, j, i)] {
                            assert!((v - w).abs() < 1e-14);
                        }
                    }
                }
            }
        }
    }
}
