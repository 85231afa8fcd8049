//! Dense complex matrices and the deterministic linear algebra the rest of
//! the crate is built on: Hermitian spectral tools, PSD certification,
//! semidefinite factorization and unitary completion of Gram-equal column
//! families.
//!
//! Everything here is plain double precision, row-major storage, no global
//! state. Matrices are value types and freely shareable across threads.

mod completion;
mod eig;
mod lu;
mod psd;

pub use completion::{unitary_completion, PIVOT_THRESHOLD};
pub use eig::{hermitian_eigen, unitary_eigen, HermitianEigen, UnitaryEigen};
pub use lu::LuFactors;
pub use psd::{psd_check, psd_factor, psd_factor_with_floor, schur_product, PsdVerdict};

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default relative tolerance for PSD checks; downstream modules inherit it
/// unless overridden. Double-precision eigensolvers bottom out near 1e-12.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major. Carries every operator block in the
/// crate: function values, kernels and colligation blocks alike.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// 1x1 matrix wrapping a scalar.
    pub fn scalar(z: Complex64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from row slices; rows must have uniform length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Real entries convenience, mostly for tests and fixtures.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self { rows: r, cols: c, data }
    }

    /// Assemble an (nb*m) x (nb*m) matrix from an nb x nb grid of m x m blocks.
    pub fn from_block_fn(
        nb_rows: usize,
        nb_cols: usize,
        m: usize,
        mut block: impl FnMut(usize, usize) -> ComplexMatrix,
    ) -> Self {
        let mut out = Self::zeros(nb_rows * m, nb_cols * m);
        for bi in 0..nb_rows {
            for bj in 0..nb_cols {
                let b = block(bi, bj);
                assert!(b.rows == m && b.cols == m, "block size mismatch");
                out.set_submatrix(bi * m, bj * m, &b);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row_slice(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * z).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(Complex64::new(x, 0.0))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        // i-k-j order keeps the inner loop on contiguous rows.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// self* . rhs without materializing the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul: dimension mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i].conj();
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// self . rhs* without materializing the adjoint.
    pub fn mul_adjoint(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "mul_adjoint: dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..rhs.rows {
                let brow = &rhs.data[j * rhs.cols..(j + 1) * rhs.cols];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in arow.iter().zip(brow) {
                    acc += a * b.conj();
                }
                out.data[i * rhs.rows + j] = acc;
            }
        }
        out
    }

    /// Hermitian symmetrization (M + M*)/2.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian_part: non-square");
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()).scale(0.5)
        })
    }

    /// Skew part (M - M*)/2, i.e. i*Im M.
    pub fn skew_part(&self) -> Self {
        assert!(self.is_square(), "skew_part: non-square");
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] - self[(j, i)].conj()).scale(0.5)
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max column absolute sum.
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self[(i, j)].norm()).sum();
            best = best.max(s);
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of M - M*.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// Frobenius distance from unitarity, ||M*M - I||_F.
    pub fn unitary_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint_mul(self)
            .sub(&Self::identity(self.cols))
            .frobenius_norm()
    }

    /// Half-open row/column ranges.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        assert!(r1 <= self.rows && c1 <= self.cols && r0 <= r1 && c0 <= c1);
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn hcat(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "hcat: row count mismatch");
        let mut out = Self::zeros(self.rows, self.cols + rhs.cols);
        out.set_submatrix(0, 0, self);
        out.set_submatrix(0, self.cols, rhs);
        out
    }

    pub fn vcat(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "vcat: column count mismatch");
        let mut out = Self::zeros(self.rows + rhs.rows, self.cols);
        out.set_submatrix(0, 0, self);
        out.set_submatrix(self.rows, 0, rhs);
        out
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Solve self . X = B by partial-pivot LU. Errors if the condition
    /// estimate exceeds `cond_limit`.
    pub fn solve(&self, b: &Self, cond_limit: f64) -> Result<Self> {
        let lu = LuFactors::new(self);
        let cond = lu.cond_one_estimate(self.one_norm());
        if !cond.is_finite() || cond > cond_limit {
            return Err(Error::SingularResolvent { cond });
        }
        Ok(lu.solve_mat(b))
    }

    /// Unitary factor of the polar decomposition, M (M*M)^{-1/2}.
    /// Intended for matrices already close to unitary.
    pub fn polar_unitary(&self) -> Result<Self> {
        assert!(self.is_square());
        let gram = self.adjoint_mul(self);
        let eig = hermitian_eigen(&gram);
        let mut inv_sqrt = ComplexMatrix::zeros(self.cols, self.cols);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam <= 0.0 {
                return Err(Error::NotPsd { min_eigenvalue: lam });
            }
            let s = Complex64::new(1.0 / lam.sqrt(), 0.0);
            let v = eig.eigenvectors.submatrix(0, self.cols, k, k + 1);
            inv_sqrt = inv_sqrt.add(&v.mul_adjoint(&v).scale(s));
        }
        Ok(self.matmul(&inv_sqrt))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Wire format: `{"rows":r,"cols":c,"data":[[re,im],...]}` row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        if repr.rows * repr.cols != repr.data.len() {
            return Err(serde::de::Error::custom(format!(
                "matrix data length {} does not match {}x{}",
                repr.data.len(),
                repr.rows,
                repr.cols
            )));
        }
        let m = ComplexMatrix {
            rows: repr.rows,
            cols: repr.cols,
            data: repr
                .data
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        };
        if !m.is_finite() {
            return Err(serde::de::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 1.0), c(0.0, 2.0)], vec![c(3.0, 0.0), c(0.0, -1.0)]]);
        let b = ComplexMatrix::identity(2);
        assert_eq!(a.matmul(&b), a);
        let aa = a.adjoint_mul(&a);
        let aa_ref = a.adjoint().matmul(&a);
        assert!(aa.sub(&aa_ref).frobenius_norm() < 1e-14);
        let ab = a.mul_adjoint(&a);
        let ab_ref = a.matmul(&a.adjoint());
        assert!(ab.sub(&ab_ref).frobenius_norm() < 1e-14);
    }

    #[test]
    fn json_roundtrip() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.5, -2.25), c(0.1, 0.0)]]);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"rows\":1") && s.contains("\"cols\":2"));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn json_rejects_bad_length() {
        let s = r#"{"rows":2,"cols":2,"data":[[1,0]]}"#;
        assert!(serde_json::from_str::<ComplexMatrix>(s).is_err());
    }

    #[test]
    fn json_rejects_nonfinite() {
        let s = r#"{"rows":1,"cols":1,"data":[[1e999,0]]}"#;
        // serde_json parses 1e999 as inf
        assert!(serde_json::from_str::<ComplexMatrix>(s).is_err());
    }

    #[test]
    fn block_assembly() {
        let m = ComplexMatrix::from_block_fn(2, 2, 2, |i, j| {
            ComplexMatrix::identity(2).scale_re((i + 2 * j) as f64)
        });
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
        assert_eq!(m[(2, 2)], c(1.0, 0.0) * c(3.0, 0.0));
        assert_eq!(m[(1, 2)], c(0.0, 0.0));
        assert_eq!(m[(1, 3)], c(2.0, 0.0));
        assert_eq!(m[(3, 3)], c(3.0, 0.0));
    }
}
