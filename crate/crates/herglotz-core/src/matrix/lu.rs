//! Partial-pivot LU factorization with a Hager-style 1-norm condition
//! estimate. Resolvents (I - DZ)^{-1} throughout the crate go through this.

use num_complex::Complex64;

use super::ComplexMatrix;

pub struct LuFactors {
    packed: ComplexMatrix,
    perm: Vec<usize>,
    singular: bool,
}

impl LuFactors {
    pub fn new(a: &ComplexMatrix) -> Self {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;

        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_mag = lu[(k, k)].norm();
            for i in (k + 1)..n {
                let mag = lu[(i, k)].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_mag == 0.0 {
                singular = true;
                continue;
            }
            if pivot_row != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let ukj = lu[(k, j)];
                    lu[(i, j)] -= factor * ukj;
                }
            }
        }
        Self { packed: lu, perm, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    fn n(&self) -> usize {
        self.packed.rows()
    }

    /// Solve A x = b for one right-hand side.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        // Ly = Pb (unit lower triangular)
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.packed[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // Ux = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.packed[(i, j)] * x[j];
            }
            x[i] = acc / self.packed[(i, i)];
        }
        x
    }

    /// Solve A* x = b using the same factors (A* = U* L* P).
    pub fn solve_adjoint_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        // U* w = b, U* lower triangular
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.packed[(j, i)].conj() * y[j];
            }
            y[i] = acc / self.packed[(i, i)].conj();
        }
        // L* v = w, L* unit upper triangular
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.packed[(j, i)].conj() * y[j];
            }
            y[i] = acc;
        }
        // x = P^T v
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Solve A X = B columnwise.
    pub fn solve_mat(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n();
        assert_eq!(b.rows(), n, "solve_mat: rhs row count mismatch");
        let mut out = ComplexMatrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col: Vec<Complex64> = (0..n).map(|i| b[(i, j)]).collect();
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// Hager-Higham estimate of cond_1(A) = ||A||_1 ||A^{-1}||_1.
    /// A handful of solves; a lower bound in exact arithmetic but reliable
    /// as a near-singularity detector.
    pub fn cond_one_estimate(&self, a_one_norm: f64) -> f64 {
        let n = self.n();
        if n == 0 {
            return 1.0;
        }
        if self.singular {
            return f64::INFINITY;
        }
        let inv_est = {
            let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
            let mut est = 0.0f64;
            for _ in 0..5 {
                let y = self.solve_vec(&x);
                let y_norm: f64 = y.iter().map(|z| z.norm()).sum();
                if !y_norm.is_finite() {
                    return f64::INFINITY;
                }
                est = est.max(y_norm);
                let xi: Vec<Complex64> = y
                    .iter()
                    .map(|z| {
                        let m = z.norm();
                        if m == 0.0 {
                            Complex64::new(1.0, 0.0)
                        } else {
                            z / m
                        }
                    })
                    .collect();
                let z = self.solve_adjoint_vec(&xi);
                let (mut best_j, mut best_mag) = (0usize, 0.0f64);
                for (j, zj) in z.iter().enumerate() {
                    if zj.norm() > best_mag {
                        best_mag = zj.norm();
                        best_j = j;
                    }
                }
                let through: f64 = z
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum();
                if best_mag <= through + 1e-30 {
                    break;
                }
                x = vec![Complex64::new(0.0, 0.0); n];
                x[best_j] = Complex64::new(1.0, 0.0);
            }
            est
        };
        a_one_norm * inv_est
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve_mat(&ComplexMatrix::identity(self.n()))
    }
}
