//! Certificate checking: kernel-cone membership, the positivity test that
//! defines the class, decomposition-identity residuals, and seeded
//! generation of admissible kernels.
//!
//! A passing batch is evidence of membership; a failing kernel is a proof of
//! non-membership on the sampled points.

use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::colligation::{apply_representation, Colligation, Representation};
use crate::error::{Error, Result};
use crate::matrix::{psd_check, schur_product, ComplexMatrix, DEFAULT_PSD_TOL};
use crate::rng::SplitMix64;
use crate::synthesis::{AglerDecomposition, SampleSet};
use crate::testfn::{Point, TestFamily};

/// A scalar kernel over the sample points that stays PSD after twisting by
/// every test function of the working family: k and each
/// (1 - psi_t(x_i) conj(psi_t(x_j))) o k pass the PSD check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibleKernel {
    pub matrix: ComplexMatrix,
    pub provenance: String,
}

/// Verdict of a membership or admissibility check.
/// JSON: `{"pass":bool,"worst_min_eig":x,"witness":{"kernel_index":i,"test_index":t}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub worst_min_eig: f64,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_index: Option<usize>,
}

/// The entrywise Szego-type factor of one test function,
/// 1 / (1 - psi_t(x_i) conj(psi_t(x_j))); PSD by the geometric series.
fn szego_factor(psi: &ComplexMatrix, t: usize) -> ComplexMatrix {
    let n = psi.cols();
    ComplexMatrix::from_fn(n, n, |i, j| {
        (Complex64::new(1.0, 0.0) - psi[(t, i)] * psi[(t, j)].conj()).inv()
    })
}

/// The twist pattern of one test function, 1 - psi_t(x_i) conj(psi_t(x_j)).
fn twist_factor(psi: &ComplexMatrix, t: usize) -> ComplexMatrix {
    let n = psi.cols();
    ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new(1.0, 0.0) - psi[(t, i)] * psi[(t, j)].conj()
    })
}

/// Generate `count` admissible kernels, deterministically from `seed`.
///
/// Every kernel is built so admissibility holds by construction: the Schur
/// product of all Szego factors of the working family (each twist then
/// cancels its own factor, leaving a Schur product of PSD matrices), further
/// multiplied by extra Szego factors over a random subset and by a random
/// PSD Gram matrix; or a positive diagonal, whose twists are positive
/// diagonals. The first two kernels are the identity and the plain full
/// Szego product, so refutation witnesses are reproducible.
pub fn generate_admissible(
    family: &TestFamily,
    points: &[Point],
    count: usize,
    seed: u64,
) -> Result<Vec<AdmissibleKernel>> {
    let psi = family.psi_matrix(points)?;
    let n = points.len();
    let tcount = psi.rows();
    let full_szego = {
        let mut k = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(1.0, 0.0));
        for t in 0..tcount {
            k = schur_product(&k, &szego_factor(&psi, t))?;
        }
        normalize_diag(k)
    };

    let mut rng = SplitMix64::new(seed);
    let mut kernels = Vec::with_capacity(count);
    for idx in 0..count {
        let kernel = match idx {
            0 => AdmissibleKernel {
                matrix: ComplexMatrix::identity(n),
                provenance: "identity".into(),
            },
            1 => AdmissibleKernel {
                matrix: full_szego.clone(),
                provenance: "szego".into(),
            },
            _ if idx % 3 == 2 => {
                // positive diagonal
                let d = ComplexMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        Complex64::new(0.1 + rng.next_f64(), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                AdmissibleKernel { matrix: d, provenance: format!("diagonal[{}]", idx) }
            }
            _ => {
                // full Szego product, extra random Szego factors, random Gram
                let mut k = full_szego.clone();
                let extras = rng.next_usize(3);
                for _ in 0..extras {
                    let t = rng.next_usize(tcount);
                    k = schur_product(&k, &szego_factor(&psi, t))?;
                }
                let rank = 1 + rng.next_usize(n);
                let gram = rng.psd(n, rank);
                // keep the Gram factor strictly positive on the diagonal
                let gram = gram.add(&ComplexMatrix::identity(n).scale_re(0.05));
                k = schur_product(&k, &gram)?;
                AdmissibleKernel {
                    matrix: normalize_diag(k),
                    provenance: format!("szego*gram[{}]", idx),
                }
            }
        };
        kernels.push(kernel);
    }
    Ok(kernels)
}

fn normalize_diag(k: ComplexMatrix) -> ComplexMatrix {
    let max_diag = (0..k.rows()).map(|i| k[(i, i)].re).fold(0.0f64, f64::max);
    if max_diag > 0.0 {
        k.scale_re(1.0 / max_diag)
    } else {
        k
    }
}

/// Check that `kernel` is PSD and stays PSD under every test-function twist.
/// Reports the worst minimum eigenvalue and the offending test function.
pub fn check_admissible(
    kernel: &ComplexMatrix,
    family: &TestFamily,
    points: &[Point],
    tol: f64,
) -> Result<Verdict> {
    if kernel.rows() != points.len() || kernel.cols() != points.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel is {}x{} over {} points",
            kernel.rows(),
            kernel.cols(),
            points.len()
        )));
    }
    let psi = family.psi_matrix(points)?;
    let base = psd_check(kernel, tol)?;
    let mut worst = base.min_eigenvalue;
    let mut witness_test = None;
    let mut pass = base.is_psd;
    for t in 0..psi.rows() {
        let twisted = schur_product(&twist_factor(&psi, t), kernel)?;
        let verdict = psd_check(&twisted, tol)?;
        if verdict.min_eigenvalue < worst {
            worst = verdict.min_eigenvalue;
            if !verdict.is_psd {
                witness_test = Some(t);
            }
        }
        pass &= verdict.is_psd;
    }
    Ok(Verdict {
        pass,
        worst_min_eig: worst,
        witness: witness_test.map(|t| Witness { kernel_index: None, test_index: Some(t) }),
    })
}

/// The class membership test on samples: for each kernel k, the block matrix
/// with (i,j) block k_ij (f_i + f_j*) must be PSD. A failing kernel is a
/// refutation witness; the verdict reports the worst one.
pub fn check_herglotz_agler(
    samples: &SampleSet,
    kernels: &[AdmissibleKernel],
    tol: f64,
) -> Result<Verdict> {
    let n = samples.points.len();
    let m = samples.value_dim();
    let mut worst = f64::INFINITY;
    let mut pass = true;
    let mut witness = None;
    for (idx, kernel) in kernels.iter().enumerate() {
        if kernel.matrix.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "kernel {} is {}x{} over {} points",
                idx,
                kernel.matrix.rows(),
                kernel.matrix.cols(),
                n
            )));
        }
        let block = ComplexMatrix::from_block_fn(n, n, m, |i, j| {
            samples.values[i]
                .add(&samples.values[j].adjoint())
                .scale(kernel.matrix[(i, j)])
        });
        let verdict = psd_check(&block, tol)?;
        if verdict.min_eigenvalue < worst {
            worst = verdict.min_eigenvalue;
            if !verdict.is_psd {
                witness = Some(Witness { kernel_index: Some(idx), test_index: None });
            }
        }
        pass &= verdict.is_psd;
    }
    Ok(Verdict { pass, worst_min_eig: worst, witness })
}

/// Which side of the Cayley bridge a decomposition certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionSide {
    Herglotz,
    Schur,
}

/// Residuals of a decomposition against sample data: the maximal block
/// mismatch of the twisted sum against f_i + f_j* (Herglotz side) or
/// I - T_i T_j* (Schur side), plus PSD verdicts of every kernel block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub residual: f64,
    pub kernel_verdicts: Vec<crate::matrix::PsdVerdict>,
    pub pass: bool,
}

pub fn check_decomposition_identity(
    samples: &SampleSet,
    decomp: &AglerDecomposition,
    side: DecompositionSide,
    tol: f64,
) -> Result<DecompositionReport> {
    let n = samples.points.len();
    if decomp.point_count() != n || decomp.block_dim != samples.value_dim() {
        return Err(Error::DimensionMismatch(format!(
            "decomposition over {} points of block dim {}, samples have {} points of dim {}",
            decomp.point_count(),
            decomp.block_dim,
            n,
            samples.value_dim()
        )));
    }
    let targets = match side {
        DecompositionSide::Herglotz => crate::synthesis::herglotz_targets(&samples.values),
        DecompositionSide::Schur => crate::synthesis::schur_targets(&samples.values),
    };
    let residual = decomp.reconstruction_residual(&targets);
    let kernel_verdicts: Vec<crate::matrix::PsdVerdict> = decomp
        .gammas
        .iter()
        .map(|g| psd_check(g, DEFAULT_PSD_TOL.max(tol)))
        .collect::<Result<Vec<_>>>()?;
    let pass = residual <= tol && kernel_verdicts.iter().all(|v| v.is_psd);
    Ok(DecompositionReport { residual, kernel_verdicts, pass })
}

/// Extract the decomposition a relations-passing colligation certifies:
/// with eta(x) = B (I - Z_x D)^{-1}, the blocks Gamma^t_{ij} are
/// eta_i P_t eta_j*, P_t the projection onto the t-th representation block
/// (spectral projections of tau for the unitary calculus). This makes the
/// realization-to-decomposition direction executable.
pub fn decomposition_from_colligation(
    col: &Colligation,
    rep: &Representation,
    family: &TestFamily,
    points: &[Point],
) -> Result<AglerDecomposition> {
    let n = points.len();
    let m = col.coefficient_dim();
    let k = col.internal_dim();
    if rep.dim() != k {
        return Err(Error::DimensionMismatch(format!(
            "representation dim {} vs colligation internal dim {}",
            rep.dim(),
            k
        )));
    }

    // eta_i = B (I - Z_i D)^{-1}
    let mut etas = Vec::with_capacity(n);
    for x in points {
        let z = apply_representation(rep, family, x)?;
        let arg = ComplexMatrix::identity(k).sub(&z.matmul(&col.d));
        let inv = arg.solve(&ComplexMatrix::identity(k), 1e12)?;
        etas.push(col.b.matmul(&inv));
    }

    // projections and per-test-function values
    let (projections, psi_values): (Vec<ComplexMatrix>, ComplexMatrix) = match rep {
        Representation::BlockDiag { block_diag } => {
            let psi = family.psi_matrix(points)?;
            if block_diag.len() != psi.rows() {
                return Err(Error::DimensionMismatch(
                    "representation multiplicities do not match the family".into(),
                ));
            }
            let mut projections = Vec::with_capacity(block_diag.len());
            let mut offset = 0;
            for &mult in block_diag {
                let mut p = ComplexMatrix::zeros(k, k);
                for j in 0..mult {
                    p[(offset + j, offset + j)] = Complex64::new(1.0, 0.0);
                }
                offset += mult;
                projections.push(p);
            }
            (projections, psi)
        }
        Representation::UnitaryCalculus { tau } => {
            let eig = crate::matrix::unitary_eigen(tau, 1e-8)?;
            let mut projections = Vec::with_capacity(k);
            let mut psi = ComplexMatrix::zeros(k, n);
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.submatrix(0, k, j, j + 1);
                projections.push(v.mul_adjoint(&v));
                for (i, x) in points.iter().enumerate() {
                    psi[(j, i)] = family.eval_circle(lambda, x)?;
                }
            }
            (projections, psi)
        }
    };

    let gammas: Vec<ComplexMatrix> = projections
        .iter()
        .map(|p| {
            ComplexMatrix::from_block_fn(n, n, m, |i, j| {
                etas[i].matmul(p).mul_adjoint(&etas[j])
            })
        })
        .collect();

    let mut decomp = AglerDecomposition {
        psi_values,
        block_dim: m,
        gammas,
        residual: 0.0,
    };
    // residual measured against the Herglotz targets the colligation realizes
    let values: Vec<ComplexMatrix> = points
        .iter()
        .map(|x| crate::colligation::evaluate_transfer(col, rep, family, x))
        .collect::<Result<Vec<_>>>()?;
    decomp.residual = decomp.reconstruction_residual(&crate::synthesis::herglotz_targets(&values));
    Ok(decomp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colligation::{check_relations, from_canonical, CanonicalForm};
    use crate::synthesis::SolverOptions;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disc_points() -> Vec<Point> {
        vec![Point::disc(c(0.0, 0.0)), Point::disc(c(0.5, 0.0))]
    }

    #[test]
    fn szego_kernel_is_admissible() {
        // Szego matrix of the disc at {0, 1/2}: [[1,1],[1,4/3]]; its twist is
        // the all-ones matrix.
        let points = disc_points();
        let kernel = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 4.0 / 3.0]]);
        let verdict = check_admissible(&kernel, &TestFamily::Disc, &points, 1e-10).unwrap();
        assert!(verdict.pass, "worst {}", verdict.worst_min_eig);
    }

    #[test]
    fn identity_kernel_is_admissible() {
        let points = disc_points();
        let verdict =
            check_admissible(&ComplexMatrix::identity(2), &TestFamily::Disc, &points, 1e-10)
                .unwrap();
        assert!(verdict.pass);
    }

    #[test]
    fn indefinite_kernel_fails() {
        let points = disc_points();
        let kernel = ComplexMatrix::from_real_rows(&[&[1.0, 3.0], &[3.0, 1.0]]);
        let verdict = check_admissible(&kernel, &TestFamily::Disc, &points, 1e-10).unwrap();
        assert!(!verdict.pass);
        assert!(verdict.worst_min_eig < -1.0);
    }

    #[test]
    fn all_ones_kernel_fails_twist_on_disc() {
        // all-ones is PSD but its twist at {0, 1/2} is 1 - x_i conj(x_j),
        // which is indefinite: admissibility is strictly stronger than PSD.
        let points = disc_points();
        let kernel = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let verdict = check_admissible(&kernel, &TestFamily::Disc, &points, 1e-10).unwrap();
        assert!(!verdict.pass);
        assert_eq!(verdict.witness.unwrap().test_index, Some(0));
    }

    #[test]
    fn generated_kernels_are_admissible_everywhere() {
        let mut rng = crate::rng::SplitMix64::new(404);
        let fam = TestFamily::SymmetrizedBidisc { n_alpha: 12 };
        let points: Vec<Point> = (0..4)
            .map(|_| {
                crate::testfn::quotient_map(1, 1, rng.next_in_disc(0.6), rng.next_in_disc(0.6))
                    .unwrap()
            })
            .collect();
        let kernels = generate_admissible(&fam, &points, 20, 7).unwrap();
        assert_eq!(kernels.len(), 20);
        for k in &kernels {
            let verdict = check_admissible(&k.matrix, &fam, &points, 1e-9).unwrap();
            assert!(verdict.pass, "{} fails: {}", k.provenance, verdict.worst_min_eig);
        }
        // determinism
        let again = generate_admissible(&fam, &points, 20, 7).unwrap();
        for (a, b) in kernels.iter().zip(&again) {
            assert_eq!(a.matrix, b.matrix);
        }
    }

    #[test]
    fn mobius_samples_pass_with_szego_kernel() {
        let samples = SampleSet::new(
            TestFamily::Disc,
            disc_points(),
            vec![ComplexMatrix::scalar(c(1.0, 0.0)), ComplexMatrix::scalar(c(3.0, 0.0))],
        )
        .unwrap();
        let kernel = AdmissibleKernel {
            matrix: ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 4.0 / 3.0]]),
            provenance: "szego".into(),
        };
        let verdict = check_herglotz_agler(&samples, &[kernel], 1e-10).unwrap();
        assert!(verdict.pass);
    }

    #[test]
    fn skew_constant_passes_with_zero_blocks() {
        let samples = SampleSet::new(
            TestFamily::Disc,
            disc_points(),
            vec![ComplexMatrix::scalar(c(0.0, 1.0)); 2],
        )
        .unwrap();
        let kernels = generate_admissible(&TestFamily::Disc, &samples.points, 4, 1).unwrap();
        let verdict = check_herglotz_agler(&samples, &kernels, 1e-10).unwrap();
        assert!(verdict.pass);
        assert!(verdict.worst_min_eig.abs() < 1e-12);
    }

    #[test]
    fn minus_z_refuted_by_identity_kernel() {
        // f(z) = -z has f + f* < 0 on the diagonal at Re z > 0.
        let points = vec![Point::disc(c(0.5, 0.0)), Point::disc(c(0.9, 0.0))];
        let samples = SampleSet::new(
            TestFamily::Disc,
            points,
            vec![ComplexMatrix::scalar(c(-0.5, 0.0)), ComplexMatrix::scalar(c(-0.9, 0.0))],
        )
        .unwrap();
        let kernels = vec![AdmissibleKernel {
            matrix: ComplexMatrix::identity(2),
            provenance: "identity".into(),
        }];
        let verdict = check_herglotz_agler(&samples, &kernels, 1e-10).unwrap();
        assert!(!verdict.pass);
        assert!(verdict.worst_min_eig <= -1.0, "diagonal witness");
        assert_eq!(verdict.witness.unwrap().kernel_index, Some(0));
    }

    #[test]
    fn pick_certificate_checks_out() {
        let samples = SampleSet::new(
            TestFamily::Disc,
            disc_points(),
            vec![ComplexMatrix::scalar(c(1.0, 0.0)), ComplexMatrix::scalar(c(3.0, 0.0))],
        )
        .unwrap();
        let targets = crate::synthesis::herglotz_targets(&samples.values);
        let decomp = crate::synthesis::find_decomposition(
            &targets,
            &TestFamily::Disc,
            &samples.points,
            &SolverOptions::default(),
        )
        .unwrap();
        let report =
            check_decomposition_identity(&samples, &decomp, DecompositionSide::Herglotz, 1e-9)
                .unwrap();
        assert!(report.pass);
        assert!(report.residual < 1e-12);
    }

    #[test]
    fn zero_function_zero_certificate() {
        let samples = SampleSet::new(
            TestFamily::Disc,
            disc_points(),
            vec![ComplexMatrix::zeros(1, 1); 2],
        )
        .unwrap();
        let decomp = AglerDecomposition {
            psi_values: TestFamily::Disc.psi_matrix(&samples.points).unwrap(),
            block_dim: 1,
            gammas: vec![ComplexMatrix::zeros(2, 2)],
            residual: 0.0,
        };
        let report =
            check_decomposition_identity(&samples, &decomp, DecompositionSide::Herglotz, 1e-12)
                .unwrap();
        assert!(report.pass);
        assert!(report.residual == 0.0);
    }

    #[test]
    fn colligation_generated_certificate_is_tight() {
        let mut rng = crate::rng::SplitMix64::new(55);
        let fam = TestFamily::Polydisc { d: 2 };
        let rep = Representation::block_diag(vec![2, 2]);
        let canon = CanonicalForm::new(
            rng.skew_hermitian(2, 0.3),
            rng.unitary(4),
            rng.matrix(4, 2, 0.5),
        )
        .unwrap();
        let col = from_canonical(&canon).unwrap();
        assert!(check_relations(&col, 1e-10).pass);
        let points: Vec<Point> = (0..5)
            .map(|_| Point::pair(rng.next_in_disc(0.7), rng.next_in_disc(0.7)))
            .collect();
        let decomp = decomposition_from_colligation(&col, &rep, &fam, &points).unwrap();
        assert!(decomp.residual <= 1e-9, "residual {}", decomp.residual);
        for gamma in &decomp.gammas {
            assert!(psd_check(gamma, 1e-9).unwrap().is_psd);
        }
        // and the certificate verifies against the sampled values
        let values: Vec<ComplexMatrix> = points
            .iter()
            .map(|x| crate::colligation::evaluate_transfer(&col, &rep, &fam, x).unwrap())
            .collect();
        let samples = SampleSet::new(fam, points, values).unwrap();
        let report =
            check_decomposition_identity(&samples, &decomp, DecompositionSide::Herglotz, 1e-9)
                .unwrap();
        assert!(report.pass);
    }
}
