use std::sync::Arc;

use super::{check_direction, check_point, CostFunction};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifolds::MetricMatrix;

const SYMMETRY_TOL: f64 = 1e-10;

/// One- and two-electron integrals of a closed-shell molecule in a real basis.
///
/// `g` is stored densely with `g[(i, j, k, l)] = int psi_i(1) psi_j(2) psi_k(1) psi_l(2) / r12`,
/// so electron 1 carries `i, k` and electron 2 carries `j, l`. In chemists'
/// notation this is `(ik|jl)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    d: usize,
    n_occ: usize,
    s: Mat,
    h: Mat,
    g: Vec<f64>,
    e_nuc: f64,
}

#[inline]
fn idx(d: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * d + j) * d + k) * d + l
}

/// The eight index tuples equal to `g_ijkl` under real-orbital symmetry.
fn symmetric_slots(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (k, j, i, l),
        (i, l, k, j),
        (k, l, i, j),
        (j, i, l, k),
        (j, k, l, i),
        (l, i, j, k),
        (l, k, j, i),
    ]
}

/// Converts a dense chemists'-notation tensor `(ij|kl)` into the stored
/// convention, `g_ijkl = (ik|jl)`.
pub(crate) fn from_chemists(chem: &[f64], d: usize) -> Vec<f64> {
    let mut g = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    g[idx(d, i, j, k, l)] = chem[idx(d, i, k, j, l)];
                }
            }
        }
    }
    g
}

/// Inverse of [`from_chemists`].
pub(crate) fn to_chemists(g: &[f64], d: usize) -> Vec<f64> {
    let mut chem = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    chem[idx(d, i, k, j, l)] = g[idx(d, i, j, k, l)];
                }
            }
        }
    }
    chem
}

impl IntegralSet {
    /// Validates and wraps integrals already in the stored convention.
    pub fn new(n_occ: usize, s: Mat, h: Mat, g: Vec<f64>, e_nuc: f64) -> Result<Self> {
        let d = s.nrows();
        if s.shape() != (d, d) || h.shape() != (d, d) {
            return Err(Error::Ingestion(format!(
                "S is {}x{} and h is {}x{}; both must be {d}x{d}",
                s.nrows(),
                s.ncols(),
                h.nrows(),
                h.ncols()
            )));
        }
        if g.len() != d * d * d * d {
            return Err(Error::Ingestion(format!(
                "two-electron tensor has {} entries, expected d^4 = {}",
                g.len(),
                d * d * d * d
            )));
        }
        if n_occ == 0 || n_occ > d {
            return Err(Error::Ingestion(format!(
                "need 1 <= nocc <= d, got nocc={n_occ}, d={d}"
            )));
        }
        for (name, m) in [("S", &s), ("h", &h)] {
            for i in 0..d {
                for j in (i + 1)..d {
                    if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                        return Err(Error::Ingestion(format!(
                            "{name} is not symmetric at ({}, {})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        linalg::cholesky_lower(&s)
            .map_err(|_| Error::Ingestion("overlap matrix S is not positive definite".into()))?;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let base = g[idx(d, i, j, k, l)];
                        for (a, b, c, e) in symmetric_slots(i, j, k, l) {
                            if (g[idx(d, a, b, c, e)] - base).abs() > SYMMETRY_TOL {
                                return Err(Error::Ingestion(format!(
                                    "two-electron symmetry violated: g[{},{},{},{}] != g[{},{},{},{}]",
                                    i + 1,
                                    j + 1,
                                    k + 1,
                                    l + 1,
                                    a + 1,
                                    b + 1,
                                    c + 1,
                                    e + 1
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            d,
            n_occ,
            s,
            h,
            g,
            e_nuc,
        })
    }

    /// Builds from a dense chemists'-notation tensor `(ij|kl)`.
    pub fn from_chemists(n_occ: usize, s: Mat, h: Mat, chem: &[f64], e_nuc: f64) -> Result<Self> {
        let d = s.nrows();
        if chem.len() != d * d * d * d {
            return Err(Error::Ingestion(format!(
                "two-electron tensor has {} entries, expected d^4 = {}",
                chem.len(),
                d * d * d * d
            )));
        }
        Self::new(n_occ, s, h, from_chemists(chem, d), e_nuc)
    }

    /// Synthetic integrals with the full 8-fold symmetry, made by averaging a
    /// random tensor over the symmetry group. Overlap is `B B^T + I`.
    pub fn random(d: usize, n_occ: usize, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = Mat::from_fn(d, d, |_, _| rng.random_range(-0.3..0.3));
        let s = &b * b.transpose() + Mat::identity(d, d);
        let h = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let h = (&h + h.transpose()) * 0.5;
        let raw: Vec<f64> = (0..d * d * d * d).map(|_| rng.random_range(0.0..0.5)).collect();
        let mut g = vec![0.0; raw.len()];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        // Sum over the orbit in one fixed order so every
                        // member gets bit-identical values.
                        let (a, b, c, e) = *symmetric_slots(i, j, k, l).iter().min().unwrap();
                        let sum: f64 = symmetric_slots(a, b, c, e)
                            .iter()
                            .map(|&(a, b, c, e)| raw[idx(d, a, b, c, e)])
                            .sum();
                        g[idx(d, i, j, k, l)] = sum / 8.0;
                    }
                }
            }
        }
        IntegralSet::new(n_occ, s, h, g, 0.7)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_occ(&self) -> usize {
        self.n_occ
    }

    pub fn overlap(&self) -> &Mat {
        &self.s
    }

    pub fn core_hamiltonian(&self) -> &Mat {
        &self.h
    }

    pub fn e_nuc(&self) -> f64 {
        self.e_nuc
    }

    /// `g_ijkl` (0-based).
    #[inline]
    pub fn g(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.g[idx(self.d, i, j, k, l)]
    }

    pub fn g_dense(&self) -> &[f64] {
        &self.g
    }

    /// Dense tensor in chemists' notation, `chem[(i, j, k, l)] = (ij|kl)`.
    pub fn chemists(&self) -> Vec<f64> {
        to_chemists(&self.g, self.d)
    }
}

/// The Fock matrix `F_ij = h_ij + sum_kl P_kl (2 g_ikjl - g_ijkl)`, with `P = C C^T`.
#[derive(Debug, Clone)]
pub struct FockState {
    pub f: Mat,
    pub density: Mat,
}

/// Closed-shell Hartree-Fock electronic energy
/// `f(C) = sum_ij P_ij (h_ij + F_ij)`, extended to all `d x N` matrices.
///
/// Since `F` itself depends on `P`, the exact gradient is `4 F C`.
#[derive(Debug, Clone)]
pub struct HartreeFock {
    ints: Arc<IntegralSet>,
    metric: Arc<MetricMatrix>,
}

impl HartreeFock {
    pub fn new(ints: Arc<IntegralSet>) -> Result<Self> {
        let metric = Arc::new(MetricMatrix::new(ints.s.clone())?);
        Ok(Self { ints, metric })
    }

    pub fn integrals(&self) -> &Arc<IntegralSet> {
        &self.ints
    }

    pub fn fock(&self, c: &Mat) -> Result<FockState> {
        check_point(self.ints.d, c)?;
        let d = self.ints.d;
        let p = c * c.transpose();
        let mut f = self.ints.h.clone();
        for j in 0..d {
            for i in 0..d {
                let mut acc = 0.0;
                for l in 0..d {
                    for k in 0..d {
                        acc += p[(k, l)] * (2.0 * self.ints.g(i, k, j, l) - self.ints.g(i, j, k, l));
                    }
                }
                f[(i, j)] += acc;
            }
        }
        Ok(FockState { f, density: p })
    }

    /// `W_kr = sum_ls Q_sl (4 g_klrs - g_krls - g_krsl)`.
    fn hessian_contraction(&self, q: &Mat) -> Mat {
        let d = self.ints.d;
        let g = |i, j, k, l| self.ints.g(i, j, k, l);
        Mat::from_fn(d, d, |k, r| {
            let mut acc = 0.0;
            for l in 0..d {
                for s in 0..d {
                    acc += q[(s, l)] * (4.0 * g(k, l, r, s) - g(k, r, l, s) - g(k, r, s, l));
                }
            }
            acc
        })
    }
}

impl CostFunction for HartreeFock {
    fn metric(&self) -> &Arc<MetricMatrix> {
        &self.metric
    }

    fn value(&self, c: &Mat) -> Result<f64> {
        let fock = self.fock(c)?;
        Ok(fock.density.dot(&(&self.ints.h + &fock.f)))
    }

    fn euclidean_gradient(&self, c: &Mat) -> Result<Mat> {
        Ok(self.fock(c)?.f * c * 4.0)
    }

    /// `4 (F V + W(C V^T) C)`, a contraction of the dense Hessian.
    fn euclidean_hessian_apply(&self, c: &Mat, v: &Mat) -> Result<Mat> {
        check_direction(c, v)?;
        let fock = self.fock(c)?;
        let w = self.hessian_contraction(&(c * v.transpose()));
        Ok((fock.f * v + w * c) * 4.0)
    }

    /// Entry `(k + i d, l + j d)` is
    /// `4 (F_kl delta_ij + sum_rs c_ri c_sj (4 g_klrs - g_krls - g_krsl))`.
    fn euclidean_hessian_matrix(&self, c: &Mat) -> Result<Mat> {
        let fock = self.fock(c)?;
        let (d, n) = c.shape();
        let g = |i, j, k, l| self.ints.g(i, j, k, l);
        let mut out = Mat::zeros(d * n, d * n);
        for j in 0..n {
            for l in 0..d {
                for i in 0..n {
                    for k in 0..d {
                        let mut acc = if i == j { fock.f[(k, l)] } else { 0.0 };
                        for s in 0..d {
                            let csj = c[(s, j)];
                            if csj == 0.0 {
                                continue;
                            }
                            for r in 0..d {
                                acc += c[(r, i)]
                                    * csj
                                    * (4.0 * g(k, l, r, s) - g(k, r, l, s) - g(k, r, s, l));
                            }
                        }
                        out[(k + i * d, l + j * d)] = 4.0 * acc;
                    }
                }
            }
        }
        Ok(out)
    }

    fn value_offset(&self) -> f64 {
        self.ints.e_nuc
    }

    fn label(&self) -> String {
        format!("hartree_fock(d={}, nocc={})", self.ints.d, self.ints.n_occ)
    }
}
