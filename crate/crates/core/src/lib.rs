//! Finite-basis one-body reduced density-matrix functional theory for the
//! canonical ensemble at finite temperature.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] enumerates N-particle occupation-number bases and lifts one- and
//!   two-body operators into them.
//! * [`ensemble`] computes Gibbs states, entropies, free energies and 1RDMs.
//! * [`functional`] evaluates the universal functional through its concave
//!   dual and inverts the potential-to-1RDM map with Newton's method.
//! * [`representability`] builds explicit density operators for admissible
//!   1RDMs and provides seeded samplers.
//! * [`verify`] runs seeded property campaigns and produces reports.
//! * [`models`] holds the reference Hamiltonians used by the campaigns.
//! * [`io`] contains the JSON/CSV exchange formats.

pub mod ensemble;
pub mod error;
pub mod fock;
pub mod functional;
pub mod io;
pub mod linalg;
pub mod models;
pub mod representability;
pub mod verify;

pub use ensemble::{
    classify_rdm, entropy, gibbs_state, helmholtz, natural_spectrum, one_rdm, DensityOperator, EnsembleParams,
    GibbsSolution, NaturalSpectrum, OneRdm, RdmClass, DEFAULT_CLASSIFY_TOL,
};
pub use error::{Error, Result};
pub use fock::{
    build_basis, lift_one_body, lift_two_body, slater_state, BasisTag, ConfigurationBasis, ManyBodyOperator,
    OneBodyOperator, Orbitals, Statistics, TwoBodyOperator,
};
pub use functional::{
    invert_potential, omega_of_v, potential_basis, response_jacobian, universal_functional, universal_functional_with,
    InversionOptions, InversionReport, IterationRecord, PotentialBasis, System, TracelessPotential, Verdict,
};
pub use linalg::{CMat, C64};
pub use models::ModelSpec;
pub use representability::{
    coleman_bosonic, coleman_fermionic, construct_density, polytope_decompose, random_rdm, PolytopeDecomposition,
};
pub use verify::{run_check, run_suite, SuiteConfig, SuiteReport, TheoremReport, VerifyConfig};
