//! Herglotz-Agler class functions over test-function collections, at finite
//! scale: evaluate functions from realizations or measures, synthesize
//! unitary colligations from point samples, convert between the Herglotz and
//! Schur sides, and certify class membership with positive-kernel
//! certificates.
//!
//! Module map:
//! - [`matrix`]: dense complex linear algebra (eigen, LU, PSD, completion)
//! - [`testfn`]: concrete test-function collections and the evaluation map
//! - [`colligation`]: colligation blocks, relations, transfer evaluation
//! - [`synthesis`]: Cayley bridge, decomposition search, Kolmogorov
//!   factorization, lurking isometry, end-to-end synthesis
//! - [`disc`]: the classical disc case, measures and their realizations
//! - [`verify`]: admissible kernels and membership/refutation checks

pub mod colligation;
pub mod disc;
pub mod error;
pub mod matrix;
pub mod rng;
pub mod synthesis;
pub mod testfn;
pub mod verify;

pub use colligation::{
    apply_representation, check_relations, evaluate_canonical, evaluate_transfer, from_canonical,
    to_canonical, CanonicalForm, Colligation, RelationsReport, Representation,
    DEFAULT_RELATIONS_TOL,
};
pub use error::{Error, Result};
pub use matrix::{
    psd_check, psd_factor, schur_product, unitary_completion, ComplexMatrix, PsdVerdict,
    DEFAULT_PSD_TOL,
};
pub use disc::{herglotz_from_measure, measure_realization, recover_measure, DiscreteMeasure};
pub use num_complex::Complex64;
pub use synthesis::{
    cayley_to_herglotz, cayley_to_schur, extend, find_decomposition, herglotz_targets,
    kolmogorov_factor, lurking_isometry, schur_targets, synthesize_herglotz, AglerDecomposition,
    DecompositionMethod, SampleSet, SolverOptions, Synthesized,
};
pub use testfn::{quotient_map, Point, TestFamily, TestLabel, TestVector};
pub use verify::{
    check_admissible, check_decomposition_identity, check_herglotz_agler,
    decomposition_from_colligation, generate_admissible, AdmissibleKernel, DecompositionSide,
    Verdict,
};
