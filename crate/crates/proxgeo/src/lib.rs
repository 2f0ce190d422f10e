//! Fixed-point iteration, proximal minimization and asymptotic-regularity
//! rate certification on concrete geodesic metric spaces.
//!
//! The crate provides four model spaces (Euclidean, the hyperbolic plane,
//! finite metric trees, and the l-infinity plane as a non-CAT(0) control),
//! metric projections and Moreau-Yosida resolvents as firmly nonexpansive
//! operators on them, a Picard/proximal iteration engine with displacement
//! analytics and Fejér monitoring, asymptotic centers, explicit rate
//! certificates for asymptotic regularity, and a randomized axiom/modulus
//! verification harness.
//!
//! Heavy sweeps (axiom verification, operator audits) are data-parallel via
//! rayon behind the default `parallel` feature; disabling the feature keeps
//! the same APIs on a sequential fallback. Reports are deterministic in the
//! seed either way.

pub mod centers;
pub mod error;
pub mod exec;
pub mod functionals;
pub mod iteration;
pub mod modulus;
pub mod operators;
pub mod sets;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Parallelism;
pub use space::{chain_parameter, Space, SpaceConfig, SpacePoint, TreeDescription};

pub use centers::{
    asymptotic_center, asymptotic_radius, delta_convergence_diagnostic, CenterResult,
    DeltaDiagnosticReport, SequenceWindow, WindowPolicy,
};
pub use functionals::{Functional, ResolventParams, WeightedTerm};
pub use iteration::{
    certify_asymptotic_regularity, certify_by_iteration, certify_many_by_iteration,
    displacement_analytics, fejer_audit, picard_trace, proximal_point_run, rate_bound,
    union_fixed_point_search, CertVerdict, CertificationReport, DisplacementAnalytics,
    IterationTrace, RateCertificate, RateHypothesis, RateKind, UnionClassification,
    UnionSearchResult,
};
pub use modulus::{ModulusDescriptor, ModulusForm};
pub use operators::{
    bruck_transform, firm_nonexpansiveness_audit, firm_nonexpansiveness_audit_with,
    sample_operator_pairs, standard_lambda_grid, FneAuditReport, Operator, OperatorKind,
    OperatorProps, PairSample,
};
pub use sets::ConvexSet;
pub use verify::{
    cn_probe_points, cn_violation, modulus_audit, modulus_audit_with, sample_points,
    verify_space_axioms, verify_space_axioms_with, ModulusAuditReport, Region, Sampler,
    SpaceAxiomReport,
};
