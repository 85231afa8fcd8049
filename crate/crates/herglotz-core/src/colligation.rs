//! Colligation operator blocks (A, B, C, D), the relations contract that
//! makes them realize functions with PSD real part, transfer-function
//! evaluation, and the normalized canonical form
//! f = i Im f(x0) + V*(I + UZ)(I - UZ)^{-1} V with U unitary and
//! V*V = Re f(x0).

use serde::{Deserialize, Serialize};



use crate::error::{Error, Result};
use crate::matrix::{unitary_eigen, ComplexMatrix};
use crate::testfn::{Point, TestFamily, INTERIOR_MARGIN};

/// Relations residuals looser than raw PSD tolerance: synthesized
/// colligations accumulate error through factorization and completion.
pub const DEFAULT_RELATIONS_TOL: f64 = 1e-8;

/// Condition-estimate ceiling beyond which resolvents are treated as
/// singular (the point is too close to the boundary).
pub const RESOLVENT_COND_LIMIT: f64 = 1e12;

/// Operator 2x2 block. A is m x m on the coefficient space, D is k x k on
/// the internal space. JSON: `{"A":matrix,"B":matrix,"C":matrix,"D":matrix}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Colligation {
    #[serde(rename = "A")]
    pub a: ComplexMatrix,
    #[serde(rename = "B")]
    pub b: ComplexMatrix,
    #[serde(rename = "C")]
    pub c: ComplexMatrix,
    #[serde(rename = "D")]
    pub d: ComplexMatrix,
}

impl Colligation {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix, d: ComplexMatrix) -> Result<Self> {
        let col = Self { a, b, c, d };
        col.check_shapes()?;
        Ok(col)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (m, k) = (self.coefficient_dim(), self.internal_dim());
        let ok = self.a.rows() == m
            && self.a.cols() == m
            && self.b.rows() == m
            && self.b.cols() == k
            && self.c.rows() == k
            && self.c.cols() == m
            && self.d.rows() == k
            && self.d.cols() == k;
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "colligation blocks A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                self.a.rows(),
                self.a.cols(),
                self.b.rows(),
                self.b.cols(),
                self.c.rows(),
                self.c.cols(),
                self.d.rows(),
                self.d.cols()
            )));
        }
        Ok(())
    }

    pub fn coefficient_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn internal_dim(&self) -> usize {
        self.d.rows()
    }
}

/// Finite-dimensional model of the representation pi of the working test
/// algebra: block-diagonal multiplicities over the working subset, or the
/// functional calculus of a unitary tau for circle-parametrized families.
/// JSON: `{"block_diag":[k1,...]}` or `{"tau":matrix}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Representation {
    BlockDiag { block_diag: Vec<usize> },
    UnitaryCalculus { tau: ComplexMatrix },
}

impl Representation {
    pub fn block_diag(multiplicities: Vec<usize>) -> Self {
        Representation::BlockDiag { block_diag: multiplicities }
    }

    pub fn unitary_calculus(tau: ComplexMatrix) -> Result<Self> {
        let defect = tau.unitary_defect();
        if defect > DEFAULT_RELATIONS_TOL {
            return Err(Error::NonUnitaryTau { defect });
        }
        Ok(Representation::UnitaryCalculus { tau })
    }

    /// Dimension k of the internal space the representation acts on.
    pub fn dim(&self) -> usize {
        match self {
            Representation::BlockDiag { block_diag } => block_diag.iter().sum(),
            Representation::UnitaryCalculus { tau } => tau.rows(),
        }
    }
}

/// Z = pi(E(x)) for the given finite model. BlockDiag places psi_t(x) along
/// the diagonal with its multiplicity; UnitaryCalculus evaluates the
/// family's circle test function at the spectrum of tau. The result is a
/// strict contraction for interior x.
pub fn apply_representation(
    rep: &Representation,
    family: &TestFamily,
    x: &Point,
) -> Result<ComplexMatrix> {
    match rep {
        Representation::BlockDiag { block_diag } => {
            let tv = family.evaluate_tests(x)?;
            if block_diag.len() != tv.values.len() {
                return Err(Error::DimensionMismatch(format!(
                    "representation has {} multiplicities, family has {} test functions",
                    block_diag.len(),
                    tv.values.len()
                )));
            }
            let used_sup = tv
                .values
                .iter()
                .zip(block_diag)
                .filter(|(_, &mult)| mult > 0)
                .map(|(z, _)| z.norm())
                .fold(0.0, f64::max);
            if used_sup >= 1.0 - INTERIOR_MARGIN {
                return Err(Error::NotInterior { sup: used_sup });
            }
            let k: usize = block_diag.iter().sum();
            let mut z = ComplexMatrix::zeros(k, k);
            let mut offset = 0;
            for (t, &mult) in block_diag.iter().enumerate() {
                for j in 0..mult {
                    z[(offset + j, offset + j)] = tv.values[t];
                }
                offset += mult;
            }
            Ok(z)
        }
        Representation::UnitaryCalculus { tau } => {
            if !family.is_circle_parametrized() {
                return Err(Error::UnsupportedRepresentation(
                    "unitary calculus needs a circle-parametrized family".into(),
                ));
            }
            let eig = unitary_eigen(tau, DEFAULT_RELATIONS_TOL)
                .map_err(|e| match e {
                    Error::NonUnitary { defect } => Error::NonUnitaryTau { defect },
                    other => other,
                })?;
            let k = tau.rows();
            let mut z = ComplexMatrix::zeros(k, k);
            let mut sup = 0.0f64;
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                let val = family.eval_circle(lambda, x)?;
                sup = sup.max(val.norm());
                let v = eig.eigenvectors.submatrix(0, k, j, j + 1);
                z = z.add(&v.mul_adjoint(&v).scale(val));
            }
            if sup >= 1.0 - INTERIOR_MARGIN {
                return Err(Error::NotInterior { sup });
            }
            Ok(z)
        }
    }
}

/// The circle calculus computed the direct way, psi(tau, x) by matrix
/// inversion instead of through the spectrum; the two routes agree for
/// unitary tau and serve as mutual checks.
pub fn circle_calculus_direct(
    family: &TestFamily,
    tau: &ComplexMatrix,
    x: &Point,
) -> Result<ComplexMatrix> {
    let k = tau.rows();
    let (num_coeff, lin) = match family {
        TestFamily::SymmetrizedBidisc { .. } => {
            // (2 p tau - s I)(2 I - s tau)^{-1}
            let (s, p) = (x.coords()[0], x.coords()[1]);
            (
                tau.scale(p.scale(2.0)).sub(&ComplexMatrix::identity(k).scale(s)),
                ComplexMatrix::identity(k)
                    .scale_re(2.0)
                    .sub(&tau.scale(s)),
            )
        }
        TestFamily::QuotientBidisc { t, .. } => {
            let (p1, p2) = (x.coords()[0], x.coords()[1]);
            (
                tau.scale(p2.powu(*t).scale(2.0))
                    .sub(&ComplexMatrix::identity(k).scale(p1)),
                ComplexMatrix::identity(k)
                    .scale_re(2.0)
                    .sub(&tau.scale(p1)),
            )
        }
        _ => {
            return Err(Error::UnsupportedRepresentation(
                "direct circle calculus needs a circle-parametrized family".into(),
            ))
        }
    };
    // polynomials in tau commute, so the order of the two factors is free
    let inv_applied = lin.solve(&num_coeff, RESOLVENT_COND_LIMIT)?;
    Ok(inv_applied)
}

/// f(x) = A + B Z (I - D Z)^{-1} C with Z = pi(E(x)).
pub fn evaluate_transfer(
    col: &Colligation,
    rep: &Representation,
    family: &TestFamily,
    x: &Point,
) -> Result<ComplexMatrix> {
    col.check_shapes()?;
    if rep.dim() != col.internal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "representation dim {} vs colligation internal dim {}",
            rep.dim(),
            col.internal_dim()
        )));
    }
    let z = apply_representation(rep, family, x)?;
    transfer_with_z(col, &z)
}

/// Transfer evaluation from a precomputed Z block.
pub fn transfer_with_z(col: &Colligation, z: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = col.internal_dim();
    let resolvent_arg = ComplexMatrix::identity(k).sub(&col.d.matmul(z));
    let solved = resolvent_arg.solve(&col.c, RESOLVENT_COND_LIMIT)?;
    Ok(col.a.add(&col.b.matmul(&z.matmul(&solved))))
}

/// Residual norms of the five colligation relations
/// D*D = DD* = I, D*C = B*, C*C = BB* = A + A*.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationsReport {
    pub d_unitary_left: f64,
    pub d_unitary_right: f64,
    pub dc_equals_b_adjoint: f64,
    pub cc_equals_re_a: f64,
    pub bb_equals_re_a: f64,
    pub tol: f64,
    pub pass: bool,
}

impl RelationsReport {
    pub fn worst(&self) -> f64 {
        self.d_unitary_left
            .max(self.d_unitary_right)
            .max(self.dc_equals_b_adjoint)
            .max(self.cc_equals_re_a)
            .max(self.bb_equals_re_a)
    }
}

/// Residuals of the relations contract, Frobenius norms, pass/fail per the
/// given tolerance.
pub fn check_relations(col: &Colligation, tol: f64) -> RelationsReport {
    let k = col.internal_dim();
    let eye_k = ComplexMatrix::identity(k);
    let re_a = col.a.add(&col.a.adjoint());
    let d_unitary_left = col.d.adjoint_mul(&col.d).sub(&eye_k).frobenius_norm();
    let d_unitary_right = col.d.mul_adjoint(&col.d).sub(&eye_k).frobenius_norm();
    let dc_equals_b_adjoint = col
        .d
        .adjoint_mul(&col.c)
        .sub(&col.b.adjoint())
        .frobenius_norm();
    let cc_equals_re_a = col.c.adjoint_mul(&col.c).sub(&re_a).frobenius_norm();
    let bb_equals_re_a = col.b.mul_adjoint(&col.b).sub(&re_a).frobenius_norm();
    let mut report = RelationsReport {
        d_unitary_left,
        d_unitary_right,
        dc_equals_b_adjoint,
        cc_equals_re_a,
        bb_equals_re_a,
        tol,
        pass: false,
    };
    report.pass = report.worst() <= tol;
    report
}

/// The normalized realization data: f = imag0 + V*(I+UZ)(I-UZ)^{-1}V with
/// imag0 = i Im f(x0) skew-Hermitian, U unitary, V*V = Re f(x0).
/// JSON: `{"imag0":matrix,"U":matrix,"V":matrix}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub imag0: ComplexMatrix,
    #[serde(rename = "U")]
    pub u: ComplexMatrix,
    #[serde(rename = "V")]
    pub v: ComplexMatrix,
}

impl CanonicalForm {
    pub fn new(imag0: ComplexMatrix, u: ComplexMatrix, v: ComplexMatrix) -> Result<Self> {
        let canon = Self { imag0, u, v };
        canon.check_shapes()?;
        Ok(canon)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let m = self.imag0.rows();
        let k = self.u.rows();
        let ok = self.imag0.cols() == m
            && self.u.cols() == k
            && self.v.rows() == k
            && self.v.cols() == m;
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "canonical blocks imag0 {}x{}, U {}x{}, V {}x{}",
                self.imag0.rows(),
                self.imag0.cols(),
                self.u.rows(),
                self.u.cols(),
                self.v.rows(),
                self.v.cols()
            )));
        }
        Ok(())
    }

    pub fn coefficient_dim(&self) -> usize {
        self.imag0.rows()
    }

    pub fn internal_dim(&self) -> usize {
        self.u.rows()
    }

    /// Residual check of the structural invariants: imag0 skew-Hermitian,
    /// U unitary. Returns the worst residual.
    pub fn structural_defect(&self) -> f64 {
        let skew = self.imag0.add(&self.imag0.adjoint()).frobenius_norm();
        skew.max(self.u.unitary_defect())
    }

    /// f(x0) = imag0 + V*V.
    pub fn value_at_base(&self) -> ComplexMatrix {
        self.imag0.add(&self.v.adjoint_mul(&self.v))
    }
}

/// Extract the canonical form of a relations-passing colligation:
/// imag0 = (A - A*)/2, U = D, V = C / sqrt(2).
///
/// The sqrt(2) scaling is the one that makes the canonical evaluation agree
/// with the transfer formula identically; the roundtrip tests lock it in.
pub fn to_canonical(col: &Colligation, tol: f64) -> Result<CanonicalForm> {
    let report = check_relations(col, tol);
    if !report.pass {
        return Err(Error::RelationsViolated { residual: report.worst() });
    }
    CanonicalForm::new(
        col.a.skew_part(),
        col.d.clone(),
        col.c.scale_re(std::f64::consts::FRAC_1_SQRT_2),
    )
}

/// Rebuild the colligation from canonical data:
/// A = imag0 + V*V, D = U, C = sqrt(2) V, B = sqrt(2) V* U.
/// The output satisfies the relations exactly (given U unitary).
pub fn from_canonical(canon: &CanonicalForm) -> Result<Colligation> {
    canon.check_shapes()?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let a = canon.imag0.add(&canon.v.adjoint_mul(&canon.v));
    let b = canon.v.adjoint().matmul(&canon.u).scale_re(sqrt2);
    let c = canon.v.scale_re(sqrt2);
    let d = canon.u.clone();
    Colligation::new(a, b, c, d)
}

/// f(x) = imag0 + V*(I + U Z)(I - U Z)^{-1} V.
pub fn evaluate_canonical(
    canon: &CanonicalForm,
    rep: &Representation,
    family: &TestFamily,
    x: &Point,
) -> Result<ComplexMatrix> {
    canon.check_shapes()?;
    if rep.dim() != canon.internal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "representation dim {} vs canonical internal dim {}",
            rep.dim(),
            canon.internal_dim()
        )));
    }
    let z = apply_representation(rep, family, x)?;
    canonical_with_z(canon, &z)
}

/// Canonical evaluation from a precomputed Z block.
pub fn canonical_with_z(canon: &CanonicalForm, z: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = canon.internal_dim();
    let uz = canon.u.matmul(z);
    let eye = ComplexMatrix::identity(k);
    let solved = eye.sub(&uz).solve(&canon.v, RESOLVENT_COND_LIMIT)?;
    let cayley_of_uz = eye.add(&uz).matmul(&solved);
    Ok(canon.imag0.add(&canon.v.adjoint_mul(&cayley_of_uz)))
}
