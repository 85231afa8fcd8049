//! Unitary completion of Gram-equal column families: given X and Y with
//! X*X = Y*Y, build the unitary W with W x_j = y_j.
//!
//! The defect completion is deterministic: orthonormal bases of the
//! orthogonal complements of span(X) and span(Y) are built by pivoted
//! Gram-Schmidt over the canonical basis in index order and matched in that
//! order, so synthesized colligations are reproducible run to run.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Gram-Schmidt pivot threshold for rank decisions.
pub const PIVOT_THRESHOLD: f64 = 1e-8;

/// Complete the column correspondence x_j -> y_j to a full unitary.
///
/// Requires equal ambient dimension, equal column counts, and Gram equality
/// ||X*X - Y*Y||_F <= tol; returns `GramMismatch` otherwise. When Gram
/// equality holds the extension always exists (ranks and defects match).
pub fn unitary_completion(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    tol: f64,
) -> Result<ComplexMatrix> {
    if x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "unitary_completion: {}x{} vs {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let n = x.rows();
    let gram_defect = x
        .adjoint_mul(x)
        .sub(&y.adjoint_mul(y))
        .frobenius_norm();
    if gram_defect > tol {
        return Err(Error::GramMismatch { defect: gram_defect, tol });
    }

    // Orthonormalize the X columns in index order; Y follows the exact same
    // accept/reject pattern (Gram equality makes the residual norms agree).
    let mut qx: Vec<Vec<Complex64>> = Vec::new();
    let mut qy: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..x.cols() {
        let xv = x.column(j);
        let yv = y.column(j);
        let scale = 1.0 + norm(&xv);
        let rx = orthogonalize(&xv, &qx);
        let ry = orthogonalize(&yv, &qy);
        if norm(&rx) > PIVOT_THRESHOLD * scale {
            qx.push(normalize(rx));
            qy.push(normalize(ry));
        }
    }
    // Complete both bases over the canonical basis in index order.
    let mut ux = qx.clone();
    let mut uy = qy.clone();
    for i in 0..n {
        if ux.len() == n {
            break;
        }
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[i] = Complex64::new(1.0, 0.0);
        let r = orthogonalize(&e, &ux);
        if norm(&r) > PIVOT_THRESHOLD {
            ux.push(normalize(r));
        }
    }
    for i in 0..n {
        if uy.len() == n {
            break;
        }
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[i] = Complex64::new(1.0, 0.0);
        let r = orthogonalize(&e, &uy);
        if norm(&r) > PIVOT_THRESHOLD {
            uy.push(normalize(r));
        }
    }
    debug_assert_eq!(ux.len(), n);
    debug_assert_eq!(uy.len(), n);

    // W = sum_k uy_k ux_k*, mapping the matched bases onto each other; on
    // span(X) this restricts to qx_k -> qy_k and hence x_j -> y_j.
    let mut w = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] += uy[k][i] * ux[k][j].conj();
            }
        }
    }
    Ok(w)
}

fn orthogonalize(v: &[Complex64], basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut r = v.to_vec();
    // Two passes of modified Gram-Schmidt keep orthogonality near machine
    // precision.
    for _ in 0..2 {
        for q in basis {
            let coeff: Complex64 = q
                .iter()
                .zip(&r)
                .map(|(qi, ri)| qi.conj() * ri)
                .sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= coeff * qi;
            }
        }
    }
    r
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let n = norm(&v);
    for z in &mut v {
        *z = z.scale(1.0 / n);
    }
    v
}
