//! PSD certification and semidefinite factorization.
//!
//! Factorization goes through the Hermitian eigendecomposition with
//! eigenvalue truncation rather than pivoted Cholesky, which gives a
//! canonical minimal-rank factor.


use super::{hermitian_eigen, ComplexMatrix};
use crate::error::{Error, Result};

/// Outcome of a PSD check. `is_psd` holds exactly when
/// `min_eigenvalue >= -tolerance_used * (1 + spectral norm)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub tolerance_used: f64,
}

/// Check `m` for positive semidefiniteness.
///
/// `m` must be Hermitian up to `tol * (1 + ||m||_F)` in Frobenius norm;
/// the verdict reports the smallest eigenvalue of the Hermitian
/// symmetrization against the relative threshold.
pub fn psd_check(m: &ComplexMatrix, tol: f64) -> Result<PsdVerdict> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "psd_check: {}x{} is not square",
            m.rows(),
            m.cols()
        )));
    }
    let defect = m.hermitian_defect();
    let scale = 1.0 + m.frobenius_norm();
    if defect > tol.max(1e-14) * scale {
        return Err(Error::NonHermitian { defect, tol: tol.max(1e-14) * scale });
    }
    let eig = hermitian_eigen(m);
    let min = eig.min_eigenvalue();
    let spectral = eig.spectral_norm();
    Ok(PsdVerdict {
        is_psd: min >= -tol * (1.0 + spectral),
        min_eigenvalue: min,
        tolerance_used: tol,
    })
}

/// Factor a PSD matrix as F F* with the column count equal to the numerical
/// rank: eigenvalues below `rank_tol * ||m||` are truncated. Columns are
/// ordered by decreasing eigenvalue.
pub fn psd_factor(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let verdict = psd_check(m, rank_tol)?;
    if !verdict.is_psd {
        return Err(Error::NotPsd { min_eigenvalue: verdict.min_eigenvalue });
    }
    let eig = hermitian_eigen(m);
    let floor = rank_tol * eig.spectral_norm();
    factor_from_eigen(&eig.eigenvalues, &eig.eigenvectors, floor)
}

/// Like `psd_factor` but truncating at an absolute eigenvalue floor; used
/// when several kernels share one scale.
pub fn psd_factor_with_floor(m: &ComplexMatrix, floor: f64, tol: f64) -> Result<ComplexMatrix> {
    let verdict = psd_check(m, tol)?;
    if !verdict.is_psd {
        return Err(Error::NotPsd { min_eigenvalue: verdict.min_eigenvalue });
    }
    let eig = hermitian_eigen(m);
    factor_from_eigen(&eig.eigenvalues, &eig.eigenvectors, floor)
}

fn factor_from_eigen(
    eigenvalues: &[f64],
    eigenvectors: &ComplexMatrix,
    floor: f64,
) -> Result<ComplexMatrix> {
    let n = eigenvectors.rows();
    let kept: Vec<usize> = (0..n)
        .rev() // descending eigenvalue order
        .filter(|&k| eigenvalues[k] > floor.max(0.0))
        .collect();
    let mut f = ComplexMatrix::zeros(n, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let s = eigenvalues[k].sqrt();
        for i in 0..n {
            f[(i, col)] = eigenvectors[(i, k)].scale(s);
        }
    }
    Ok(f)
}

/// Entrywise (Schur/Hadamard) product. PSD whenever both inputs are.
pub fn schur_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "schur_product: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * b[(i, j)]))
}
