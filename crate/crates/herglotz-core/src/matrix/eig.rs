//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, plus a
//! spectral decomposition for unitary (normal) matrices built on top of it.
//!
//! Jacobi is quadratically convergent, deterministic, and accurate to the
//! last bits at the sizes this crate works with (a few hundred at most).

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors as
/// the columns of a unitary matrix.
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// max |lambda|.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of the Hermitian part of `m`. The input is symmetrized
/// up front, so callers that need a strict Hermiticity contract must check it
/// themselves (see `psd_check`).
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    assert!(m.is_square(), "hermitian_eigen: non-square input");
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    if n > 1 {
        let frob = a.frobenius_norm().max(f64::MIN_POSITIVE);
        let stop = (f64::EPSILON * frob).powi(2);
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off <= stop {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermitianEigen { eigenvalues, eigenvectors }
}

/// One Jacobi rotation zeroing a[(p,q)]; accumulates the rotation into v.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if r <= 0.5 * f64::EPSILON * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let u = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Plane transform G with G[p][p]=c, G[p][q]=s, G[q][p]=-s*conj(u),
    // G[q][q]=c*conj(u); update a <- G* a G and v <- v G.
    let n = a.rows();
    let ubar = u.conj();
    // columns: a <- a G
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip.scale(c) - aiq * ubar.scale(s);
        a[(i, q)] = aip.scale(s) + aiq * ubar.scale(c);
    }
    // rows: a <- G* a
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj.scale(c) - aqj * u.scale(s);
        a[(q, j)] = apj.scale(s) + aqj * u.scale(c);
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip.scale(c) - viq * ubar.scale(s);
        v[(i, q)] = vip.scale(s) + viq * ubar.scale(c);
    }
}

/// Spectral decomposition of a unitary matrix: eigenvalues on the circle and
/// an orthonormal eigenbasis.
pub struct UnitaryEigen {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: ComplexMatrix,
}

/// Eigendecomposition of a unitary matrix `u`.
///
/// Works through the commuting Hermitian pair Re u = (u+u*)/2 and
/// Im u = (u-u*)/2i: eigenspaces of the real part that are degenerate get
/// refined by the compressed imaginary part, which separates conjugate pairs
/// e^{+-i theta}. Returns `defect` as an error when `u` is not unitary
/// within `tol` (Frobenius).
pub fn unitary_eigen(u: &ComplexMatrix, tol: f64) -> Result<UnitaryEigen> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "unitary_eigen: {}x{} is not square",
            u.rows(),
            u.cols()
        )));
    }
    let n = u.rows();
    let defect = u.unitary_defect();
    if defect > tol * (1.0 + (n as f64).sqrt()) {
        return Err(Error::NonUnitary { defect });
    }

    let re = u.hermitian_part();
    let eig = hermitian_eigen(&re);
    let mut basis = eig.eigenvectors;
    let lambdas = eig.eigenvalues;

    // Cluster eigenvalues of the real part; |lambda| <= 1 so an absolute gap
    // threshold is fine.
    let cluster_tol = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambdas[end] - lambdas[end - 1]).abs() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            // Refine the degenerate subspace with the compressed skew part.
            let im = u.skew_part().scale(Complex64::new(0.0, -1.0));
            let sub = basis.submatrix(0, n, start, end);
            let compressed = sub.adjoint_mul(&im.matmul(&sub));
            let inner = hermitian_eigen(&compressed);
            let rotated = sub.matmul(&inner.eigenvectors);
            basis.set_submatrix(0, start, &rotated);
        }
        start = end;
    }

    let eigenvalues: Vec<Complex64> = (0..n)
        .map(|j| {
            let v = basis.submatrix(0, n, j, j + 1);
            v.adjoint_mul(&u.matmul(&v))[(0, 0)]
        })
        .collect();
    Ok(UnitaryEigen { eigenvalues, eigenvectors: basis })
}
