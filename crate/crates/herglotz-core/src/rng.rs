//! Tiny deterministic RNG (splitmix64) so seeded artifacts are byte-identical
//! across runs and platforms. Not cryptographic; plenty for generating test
//! kernels and random instances.

use num_complex::Complex64;

use crate::matrix::ComplexMatrix;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_usize(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound.max(1) as u64) as usize
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn next_complex_gaussian(&mut self) -> Complex64 {
        Complex64::new(self.next_gaussian(), self.next_gaussian()).scale(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Uniform point on the unit circle.
    pub fn next_unimodular(&mut self) -> Complex64 {
        let th = std::f64::consts::TAU * self.next_f64();
        Complex64::new(th.cos(), th.sin())
    }

    /// Uniform-ish point in the disc of given radius.
    pub fn next_in_disc(&mut self, radius: f64) -> Complex64 {
        let r = radius * self.next_f64().sqrt();
        self.next_unimodular().scale(r)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, scale: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| self.next_complex_gaussian().scale(scale))
    }

    /// Haar-ish random unitary from Gram-Schmidt of a Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> ComplexMatrix {
        loop {
            let g = self.matrix(n, n, 1.0);
            if let Some(q) = gram_schmidt(&g) {
                return q;
            }
        }
    }

    /// Random PSD matrix G G* with G of the given rank.
    pub fn psd(&mut self, n: usize, rank: usize) -> ComplexMatrix {
        let g = self.matrix(n, rank.max(1), 1.0 / (rank.max(1) as f64).sqrt());
        g.mul_adjoint(&g)
    }

    /// Random skew-Hermitian matrix of the given scale.
    pub fn skew_hermitian(&mut self, n: usize, scale: f64) -> ComplexMatrix {
        self.matrix(n, n, scale).skew_part()
    }
}

fn gram_schmidt(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = g.rows();
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let coeff: Complex64 = q.iter().zip(&v).map(|(qi, vi)| qi.conj() * vi).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= coeff * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        for z in &mut v {
            *z = z.scale(1.0 / norm);
        }
        cols.push(v);
    }
    Some(ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = SplitMix64::new(42);
        for n in [1usize, 3, 6] {
            let u = rng.unitary(n);
            assert!(u.unitary_defect() < 1e-10, "defect {}", u.unitary_defect());
        }
    }

    #[test]
    fn psd_is_psd() {
        let mut rng = SplitMix64::new(1);
        let m = rng.psd(5, 3);
        let v = crate::matrix::psd_check(&m, 1e-10).unwrap();
        assert!(v.is_psd);
    }
}
