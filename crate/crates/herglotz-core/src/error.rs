//! Crate-wide error type. Variants carry the numeric diagnostics a caller
//! needs to tell a certified negative (infeasibility, failed verdict) from a
//! malformed input.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NonHermitian { defect: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gram matrices differ: defect {defect:.3e} exceeds {tol:.3e}")]
    GramMismatch { defect: f64, tol: f64 },

    #[error("matrix is not unitary: defect {defect:.3e}")]
    NonUnitary { defect: f64 },

    #[error("test-function denominator too small: |den| = {denom:.3e}")]
    SingularDenominator { denom: f64 },

    #[error("{t} does not divide {m}")]
    Divisibility { t: u32, m: u32 },

    #[error("point is not interior: sup of test values is {sup}")]
    NotInterior { sup: f64 },

    #[error("tau is not unitary: defect {defect:.3e}")]
    NonUnitaryTau { defect: f64 },

    #[error("U is not unitary: defect {defect:.3e}")]
    NonUnitaryU { defect: f64 },

    #[error("resolvent numerically singular: condition estimate {cond:.3e}")]
    SingularResolvent { cond: f64 },

    #[error("colligation relations violated: worst residual {residual:.3e}")]
    RelationsViolated { residual: f64 },

    #[error("Cayley transform singular: condition estimate {cond:.3e}")]
    SingularCayley { cond: f64 },

    #[error("no feasible decomposition: cone distance {distance:.3e}{}", if *.stalled { " (stall-detected, heuristic)" } else { "" })]
    Infeasible { distance: f64, stalled: bool },

    #[error("sweep limit reached with feasibility residual {residual:.3e}")]
    MaxIterations { residual: f64 },

    #[error("sample set does not contain the base point")]
    BaseMissing,

    #[error("Re f at the base point has numerical rank 0")]
    DegenerateRealPart,

    #[error("synthesized transfer fails to interpolate: error {error:.3e} exceeds {tol:.3e}")]
    InterpolationFailure { error: f64, tol: f64 },

    #[error("evaluation point outside the open unit disc: |z| = {modulus}")]
    NotInDisc { modulus: f64 },

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("operation requires scalar values (m = 1), got m = {m}")]
    NotScalar { m: usize },

    #[error("representation unsupported here: {0}")]
    UnsupportedRepresentation(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for mathematically meaningful negative results, as opposed to
    /// malformed inputs or numerical breakdown. The CLI maps these to exit
    /// code 2.
    pub fn is_certified_negative(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. } | Error::NotPsd { .. } | Error::RelationsViolated { .. }
        )
    }
}
