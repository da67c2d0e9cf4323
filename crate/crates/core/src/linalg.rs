//! Dense kernels the geometry and solvers are built from.
//!
//! Everything is column-major (`nalgebra::DMatrix`), so `vec` is a plain
//! reinterpretation of the storage and the index of entry `(i, j)` of a
//! `d x N` matrix in its vectorization is `i + j * d`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Symmetric eigendecomposition, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub eigenvalues: Vector,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Mat,
}

/// Thin SVD in the `M = U * diag(D) * V` convention (V is *not* transposed).
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Mat,
    pub singular_values: Vector,
    pub v: Mat,
}

fn require_square(m: &Mat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(dim_err(format!(
            "{what}: expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn sym(m: &Mat) -> Result<Mat> {
    require_square(m, "sym")?;
    Ok((m + m.transpose()) * 0.5)
}

pub fn asym(m: &Mat) -> Result<Mat> {
    require_square(m, "asym")?;
    Ok((m - m.transpose()) * 0.5)
}

/// Block matrix whose `(i, j)` block is `a[(i, j)] * b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Result<Mat> {
    if v.len() != rows * cols {
        return Err(dim_err(format!(
            "unvec: vector of length {} cannot fill a {rows}x{cols} matrix",
            v.len()
        )));
    }
    Ok(Mat::from_column_slice(rows, cols, v.as_slice()))
}

/// Reorders the `d * n` columns of `m` so that `m * vec(X^T) = perm(m) * vec(X)`
/// for every `d x n` matrix `X`.
///
/// Column `i + j * d` of the output is column `j + i * n` of the input.
pub fn perm_columns(m: &Mat, d: usize, n: usize) -> Result<Mat> {
    if m.ncols() != d * n {
        return Err(dim_err(format!(
            "perm_columns: expected {} columns (d={d}, N={n}), got {}",
            d * n,
            m.ncols()
        )));
    }
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for j in 0..n {
        for i in 0..d {
            out.set_column(i + j * d, &m.column(j + i * n));
        }
    }
    Ok(out)
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD of any matrix, `k = min(rows, cols)` singular values descending.
///
/// Backed by faer. nalgebra's bidiagonal SVD was not used: on small
/// rank-deficient matrices with nearly equal singular values it returns
/// factors that reconstruct the input only to about 1e-2.
pub fn svd(m: &Mat) -> Result<ThinSvd> {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(ThinSvd {
            u: Mat::zeros(r, 0),
            singular_values: Vector::zeros(0),
            v: Mat::zeros(0, c),
        });
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("svd: matrix has non-finite entries".into()));
    }
    let f = to_faer(m);
    let svd = f
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    Ok(ThinSvd {
        u: from_faer(svd.U()),
        singular_values: Vector::from_fn(k, |i, _| s[i]),
        v: from_faer(svd.V()).transpose(),
    })
}

impl ThinSvd {
    /// `x = V^T diag(1 / D) U^T b` over singular values above `cutoff`, with
    /// the number of them kept.
    pub fn pseudo_solve(&self, b: &Vector, cutoff: f64) -> (Vector, usize) {
        let utb = self.u.transpose() * b;
        let mut coeffs = Vector::zeros(self.singular_values.len());
        let mut rank = 0;
        for (k, &sigma) in self.singular_values.iter().enumerate() {
            if sigma > cutoff && sigma > 0.0 {
                coeffs[k] = utb[k] / sigma;
                rank += 1;
            }
        }
        (self.v.transpose() * coeffs, rank)
    }
}

/// Thin SVD of a `d x N` matrix with `N <= d`; singular values descending.
pub fn thin_svd(m: &Mat) -> Result<ThinSvd> {
    let (d, n) = m.shape();
    if n > d {
        return Err(dim_err(format!("thin_svd: need N <= d, got {d}x{n}")));
    }
    svd(m)
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Ties keep the order produced by the underlying solver; callers must not
/// rely on a particular eigenvector inside a degenerate eigenspace.
pub fn sym_eigen(m: &Mat) -> Result<SymEigen> {
    require_square(m, "sym_eigen")?;
    let scale = m.norm();
    let skew = (m - m.transpose()).norm();
    if skew > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Contract(format!(
            "sym_eigen: matrix is not symmetric (||M - M^T|| = {skew:.3e}, ||M|| = {scale:.3e})"
        )));
    }
    if m.is_empty() {
        return Ok(SymEigen {
            eigenvalues: Vector::zeros(0),
            eigenvectors: Mat::zeros(0, 0),
        });
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("sym_eigen: matrix has non-finite entries".into()));
    }
    let f = to_faer(&sym(m)?);
    let eig = f
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver did not converge: {e:?}")))?;
    let s = eig.S().column_vector();
    let values = Vector::from_fn(m.nrows(), |i, _| s[i]);
    Ok(sort_eigen(values, from_faer(eig.U()), true))
}

fn sort_eigen(values: Vector, vectors: Mat, descending: bool) -> SymEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    if descending {
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    } else {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    }
    let mut sorted_vectors = Mat::zeros(vectors.nrows(), n);
    let mut sorted_values = Vector::zeros(n);
    for (k, &src) in order.iter().enumerate() {
        sorted_values[k] = values[src];
        sorted_vectors.set_column(k, &vectors.column(src));
    }
    SymEigen {
        eigenvalues: sorted_values,
        eigenvectors: sorted_vectors,
    }
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky_lower(s: &Mat) -> Result<Mat> {
    require_square(s, "cholesky")?;
    s.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Contract("matrix is not symmetric positive-definite".into()))
}

/// Solves `A v = lambda S v`; eigenvalues ascending, vectors S-orthonormal.
pub fn gen_eigen(a: &Mat, s: &Mat) -> Result<SymEigen> {
    require_square(a, "gen_eigen")?;
    if a.shape() != s.shape() {
        return Err(dim_err("gen_eigen: A and S differ in shape"));
    }
    let l = cholesky_lower(s)?;
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Contract("gen_eigen: singular Cholesky factor".into()))?;
    let reduced = &l_inv * a * l_inv.transpose();
    let eig = sym_eigen(&sym(&reduced)?)?;
    let vectors = l_inv.transpose() * eig.eigenvectors;
    Ok(sort_eigen(eig.eigenvalues, vectors, false))
}

fn one_norm(m: &Mat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
// 1-norm thresholds below which the degree-m approximant is accurate to
// unit roundoff without scaling.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

/// Dense matrix exponential by scaling and squaring with Padé approximants.
pub fn expm(m: &Mat) -> Result<Mat> {
    require_square(m, "expm")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let ident = Mat::identity(n, n);
    let norm = one_norm(m);
    let a2 = m * m;

    for &(degree, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let mut power = ident.clone();
            let mut u = &ident * b[1];
            let mut v = &ident * b[0];
            for k in 1..=degree / 2 {
                power = &power * &a2;
                u += &power * b[2 * k + 1];
                v += &power * b[2 * k];
            }
            let u = m * u;
            return pade_solve(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = m * scale;
    let a2 = &a2 * (scale * scale);
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE_13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_solve(u: &Mat, v: &Mat) -> Result<Mat> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("expm: singular Padé denominator".into()))
}

/// Uniform entries in `[-1, 1)` from a ChaCha8 stream.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `B B^T / d + Id` for a seeded uniform `B`; eigenvalues lie in `[1, 1 + d)`.
pub fn random_spd(d: usize, seed: u64) -> Mat {
    let b = random_matrix(d, d, seed);
    &b * b.transpose() / d as f64 + Mat::identity(d, d)
}

/// Completes an S-orthonormal `C` to a full S-orthonormal basis `[C C_perp]`.
///
/// Gram-Schmidt in the inner product `<a, b> = a^T S b`, started from the
/// columns of `C` and fed with uniform random columns from a ChaCha8 stream
/// seeded with `seed`. Each column is orthogonalized twice.
pub fn s_orthonormal_complement(c: &Mat, s: &Mat, seed: u64) -> Result<Mat> {
    let (d, n) = c.shape();
    if s.shape() != (d, d) {
        return Err(dim_err(format!(
            "s_orthonormal_complement: S is {}x{}, C has {d} rows",
            s.nrows(),
            s.ncols()
        )));
    }
    let gram = c.transpose() * s * c;
    let residual = (&gram - Mat::identity(n, n)).norm();
    if residual > 1e-10 {
        return Err(Error::Contract(format!(
            "s_orthonormal_complement: C^T S C deviates from Id by {residual:.3e}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = Mat::zeros(d, d);
    basis.columns_mut(0, n).copy_from(c);
    let mut s_basis = Mat::zeros(d, d);
    s_basis.columns_mut(0, n).copy_from(&(s * c));

    for k in n..d {
        let mut accepted = false;
        for _ in 0..10 {
            let mut x = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let initial = (x.dot(&(s * &x))).sqrt();
            for _ in 0..2 {
                for p in 0..k {
                    let coef = s_basis.column(p).dot(&x);
                    x.axpy(-coef, &basis.column(p), 1.0);
                }
            }
            let sx = s * &x;
            let norm = x.dot(&sx).sqrt();
            if norm > 1e-8 * initial {
                basis.set_column(k, &(x / norm));
                s_basis.set_column(k, &(sx / norm));
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Numerical(
                "s_orthonormal_complement: random draws kept landing in span of previous columns"
                    .into(),
            ));
        }
    }
    Ok(basis.columns(n, d - n).into_owned())
}

/// Minimum-norm least-squares solution of `a x = b` via SVD.
///
/// Singular values below `rel_tol * sigma_max` are treated as zero. Returns
/// the solution together with the numerical rank.
pub fn min_norm_solve(a: &Mat, b: &Vector, rel_tol: f64) -> Result<(Vector, usize)> {
    if a.nrows() != b.len() {
        return Err(dim_err("min_norm_solve: rhs length differs from row count"));
    }
    let svd = svd(a)?;
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    Ok(svd.pseudo_solve(b, rel_tol * sigma_max))
}
