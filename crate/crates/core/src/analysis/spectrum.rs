use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifolds::{Manifold, ManifoldPoint};
use crate::solvers::assemble_intrinsic;

/// Side-by-side spectra of the intrinsic Stiefel and Grassmann Hessians at one point.
#[derive(Debug, Clone)]
pub struct SpectrumComparison {
    /// Descending, length `dim Gr`.
    pub eigs_gr: Vec<f64>,
    /// Descending, length `dim St`.
    pub eigs_st: Vec<f64>,
    /// RMS difference over the first `dim Gr` position-matched pairs.
    pub d: f64,
    /// `|<u_i^Gr, u_i^St>|` for the first `dim Gr` pairs.
    pub overlaps: Vec<f64>,
    /// Squared norm of the Grassmann-tangent projection of every Stiefel
    /// eigenvector, in descending eigenvalue order.
    pub horizontal_weights: Vec<f64>,
    /// The last `dim St - dim Gr` entries of `horizontal_weights`.
    pub residual_projections: Vec<f64>,
    /// Stiefel eigenvectors as `d x N` tangent matrices, descending order.
    pub st_vectors: Vec<Mat>,
    pub gr_vectors: Vec<Mat>,
}

/// Root-mean-square difference of two equally long sequences.
pub fn rms_difference(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "cannot compare spectra of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

/// Builds both intrinsic Hessians at `point` with bases sharing the same
/// orthonormal complement, then compares their spectra by sorted position.
pub fn compare_spectra(
    cost: &dyn CostFunction,
    point: &ManifoldPoint,
    seed: u64,
) -> Result<SpectrumComparison> {
    let st = point.with_manifold(Manifold::Stiefel);
    let gr = point.with_manifold(Manifold::Grassmann);
    let basis_st = st.tangent_basis(seed)?;
    let basis_gr = gr.tangent_basis(seed)?;
    let dim_gr = basis_gr.len();
    if basis_st.len() < dim_gr || basis_st.c_perp != basis_gr.c_perp {
        return Err(Error::Contract(
            "Stiefel and Grassmann bases do not share their horizontal block".into(),
        ));
    }

    let eig_st = linalg::sym_eigen(&assemble_intrinsic(cost, &st, &basis_st)?.symmetric_hessian())?;
    let eig_gr = linalg::sym_eigen(&assemble_intrinsic(cost, &gr, &basis_gr)?.symmetric_hessian())?;
    let st_vectors: Vec<Mat> = (0..basis_st.len())
        .map(|j| basis_st.combine(&eig_st.eigenvectors.column(j).into_owned()))
        .collect();
    let gr_vectors: Vec<Mat> = (0..dim_gr)
        .map(|j| basis_gr.combine(&eig_gr.eigenvectors.column(j).into_owned()))
        .collect();

    let metric = point.metric();
    let overlaps = (0..dim_gr)
        .map(|i| metric.inner(&gr_vectors[i], &st_vectors[i]).abs().min(1.0))
        .collect();
    let horizontal_weights: Vec<f64> = st_vectors
        .iter()
        .map(|u| {
            let p = gr.project_grassmann(u).map(|p| metric.inner(p.matrix(), p.matrix()));
            p.map(|w| w.clamp(0.0, 1.0))
        })
        .collect::<Result<_>>()?;
    let eigs_st: Vec<f64> = eig_st.eigenvalues.iter().copied().collect();
    let eigs_gr: Vec<f64> = eig_gr.eigenvalues.iter().copied().collect();
    let d = rms_difference(&eigs_st[..dim_gr], &eigs_gr)?;
    Ok(SpectrumComparison {
        residual_projections: horizontal_weights[dim_gr..].to_vec(),
        horizontal_weights,
        eigs_gr,
        eigs_st,
        d,
        overlaps,
        st_vectors,
        gr_vectors,
    })
}
