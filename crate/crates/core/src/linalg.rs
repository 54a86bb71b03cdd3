//! Thin layer over the dense solvers in `faer`.
//!
//! Everything here returns spectra in descending order, which is the order the
//! rest of the crate works in.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Mat, Side};

use crate::error::{KleError, Result};

/// Eigenvalues (descending) and matching eigenvectors (columns) of a symmetric matrix.
pub(crate) struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub(crate) fn symmetric_eigen(a: &Mat<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| KleError::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).rev().map(|i| s[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(SymmetricEigen { values, vectors })
}

pub(crate) fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    let mut values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| KleError::Numerical(format!("symmetric eigensolver failed: {e:?}")))?;
    values.reverse();
    Ok(values)
}

/// Thin SVD: singular values (descending) and the left singular vectors.
pub(crate) struct ThinSvd {
    pub values: Vec<f64>,
    pub left: Mat<f64>,
}

/// Only `U` is formed; `V` is never needed and dominates the cost for wide
/// sample matrices.
pub(crate) fn thin_svd(a: &Mat<f64>) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    let size = m.min(n);
    let par = faer::get_global_parallelism();
    let mut s = Diag::<f64>::zeros(size);
    let mut u = Mat::<f64>::zeros(m, size);
    let req = svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    );
    let mut buf = MemBuffer::new(req);
    svd::svd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| KleError::Numerical(format!("svd failed: {e:?}")))?;
    let s = s.column_vector();
    Ok(ThinSvd {
        values: (0..size).map(|i| s[i]).collect(),
        left: u,
    })
}

pub(crate) fn singular_values(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| KleError::Numerical(format!("svd failed: {e:?}")))
}

/// Eigenvalues of a general (possibly nonsymmetric) matrix; real parts,
/// descending. Fails if any eigenvalue has a non-negligible imaginary part.
pub(crate) fn general_real_eigenvalues(a: &Mat<f64>, imag_tol: f64) -> Result<Vec<f64>> {
    let values = a
        .eigenvalues()
        .map_err(|e| KleError::Numerical(format!("eigensolver failed: {e:?}")))?;
    let mut out = Vec::with_capacity(values.len());
    for z in values {
        if z.im.abs() > imag_tol {
            return Err(KleError::Numerical(format!(
                "complex eigenvalue {} + {}i",
                z.re, z.im
            )));
        }
        out.push(z.re);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}
