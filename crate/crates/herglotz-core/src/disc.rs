//! The classical disc case made executable: evaluating functions with PSD
//! real part from discrete measures on the circle, turning a measure into a
//! canonical realization, and recovering the measure back from a realization
//! by spectral decomposition.
//!
//! Only atomic measures are supported (quadrature rules enter as atom/weight
//! lists): a finite-dimensional unitary can only encode finitely many
//! spectral atoms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::colligation::CanonicalForm;
use crate::error::{Error, Result};
use crate::matrix::{unitary_eigen, ComplexMatrix};

/// Threshold (arc length) under which recovered eigenvalues merge into one
/// atom, weights summed.
pub const ATOM_CLUSTER_TOL: f64 = 1e-8;

/// A positive atomic measure on the unit circle plus the imaginary part of
/// the represented function at 0.
/// JSON: `{"atoms":[[re,im],...],"weights":[w,...],"imag0":x}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    #[serde(with = "atoms_serde")]
    pub atoms: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub imag0: f64,
}

mod atoms_serde {
    use super::Complex64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(atoms: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = atoms.iter().map(|z| [z.re, z.im]).collect();
        serde::Serialize::serialize(&pairs, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Complex64>, weights: Vec<f64>, imag0: f64) -> Result<Self> {
        let measure = Self { atoms, weights, imag0 };
        measure.validate()?;
        Ok(measure)
    }

    /// Point mass at a single unimodular atom.
    pub fn dirac(atom: Complex64, weight: f64) -> Result<Self> {
        Self::new(vec![atom], vec![weight], 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.len() != self.weights.len() {
            return Err(Error::Invalid(format!(
                "{} atoms but {} weights",
                self.atoms.len(),
                self.weights.len()
            )));
        }
        for atom in &self.atoms {
            if (atom.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "atom {} is not unimodular",
                    atom
                )));
            }
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Invalid("weights must be nonnegative".into()));
        }
        if !self.imag0.is_finite() {
            return Err(Error::Invalid("imag0 must be finite".into()));
        }
        for (i, a) in self.atoms.iter().enumerate() {
            for b in self.atoms.iter().skip(i + 1) {
                if (a - b).norm() <= 1e-12 {
                    return Err(Error::Invalid("atoms must be pairwise distinct".into()));
                }
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// f(z) = i imag0 + sum_j w_j (a_j + z)/(a_j - z), the integral against the
/// measure; the real part is nonnegative on the open disc.
pub fn herglotz_from_measure(mu: &DiscreteMeasure, z: Complex64) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(Error::NotInDisc { modulus: z.norm() });
    }
    let mut acc = Complex64::new(0.0, mu.imag0);
    for (atom, &w) in mu.atoms.iter().zip(&mu.weights) {
        acc += ((atom + z) / (atom - z)).scale(w);
    }
    Ok(acc)
}

/// Canonical realization of the measure: U = diag(conj(atoms)),
/// V the column of sqrt(weights). Conjugation turns (a+z)/(a-z) into
/// (1 + conj(a) z)/(1 - conj(a) z), the resolvent form the canonical
/// evaluation computes.
pub fn measure_realization(mu: &DiscreteMeasure) -> Result<CanonicalForm> {
    mu.validate()?;
    if mu.atoms.is_empty() || mu.total_mass() <= 0.0 {
        return Err(Error::EmptyMeasure);
    }
    let k = mu.atoms.len();
    let mut u = ComplexMatrix::zeros(k, k);
    let mut v = ComplexMatrix::zeros(k, 1);
    for (j, (atom, &w)) in mu.atoms.iter().zip(&mu.weights).enumerate() {
        u[(j, j)] = atom.conj();
        v[(j, 0)] = Complex64::new(w.sqrt(), 0.0);
    }
    CanonicalForm::new(
        ComplexMatrix::scalar(Complex64::new(0.0, mu.imag0)),
        u,
        v,
    )
}

/// Recover the measure from a scalar-valued canonical realization over the
/// disc: spectrally decompose U, merge eigenvalues within `ATOM_CLUSTER_TOL`
/// arc distance, and read the weights off the projections of V.
pub fn recover_measure(canon: &CanonicalForm) -> Result<DiscreteMeasure> {
    canon.check_shapes()?;
    if canon.coefficient_dim() != 1 {
        return Err(Error::NotScalar { m: canon.coefficient_dim() });
    }
    let k = canon.internal_dim();
    let eig = unitary_eigen(&canon.u, 1e-8).map_err(|e| match e {
        Error::NonUnitary { defect } => Error::NonUnitaryU { defect },
        other => other,
    })?;

    // Projection masses |v_j* V|^2 per eigenvector.
    let masses: Vec<f64> = (0..k)
        .map(|j| {
            let v = eig.eigenvectors.submatrix(0, k, j, j + 1);
            v.adjoint_mul(&canon.v)[(0, 0)].norm_sqr()
        })
        .collect();

    // Sort by argument and cluster along the circle (including wraparound).
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .arg()
            .partial_cmp(&eig.eigenvalues[b].arg())
            .unwrap()
    });
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &j in &order {
        match clusters.last_mut() {
            Some(cluster)
                if (eig.eigenvalues[*cluster.last().unwrap()] - eig.eigenvalues[j]).norm()
                    <= ATOM_CLUSTER_TOL =>
            {
                cluster.push(j);
            }
            _ => clusters.push(vec![j]),
        }
    }
    if clusters.len() > 1 {
        let first_val = eig.eigenvalues[clusters[0][0]];
        let last_val = eig.eigenvalues[*clusters.last().unwrap().last().unwrap()];
        if (first_val - last_val).norm() <= ATOM_CLUSTER_TOL {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }

    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for cluster in clusters {
        let weight: f64 = cluster.iter().map(|&j| masses[j]).sum();
        if weight <= 1e-14 {
            continue; // unobservable spectral direction
        }
        let mut rep = Complex64::new(0.0, 0.0);
        for &j in &cluster {
            rep += eig.eigenvalues[j];
        }
        let rep = rep / rep.norm();
        atoms.push(rep.conj());
        weights.push(weight);
    }
    let imag0 = canon.imag0[(0, 0)].im;
    DiscreteMeasure::new(atoms, weights, imag0)
}
