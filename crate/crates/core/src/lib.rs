//! Locally c-optimal experimental designs for accelerated degradation tests.
//!
//! Each of the `r` response components of a test unit follows a linear
//! mixed-effects degradation path. A soft failure of a component happens when
//! its unit-specific mean path crosses a threshold; the system fails once `s`
//! of the `r` components have failed. The crate computes approximate designs
//! (stress settings with unit proportions) that minimize the asymptotic
//! variance of an estimated quantile `t_alpha` of the system failure time, and
//! certifies them with the general equivalence theorem.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod criterion;
pub mod error;
pub mod failure;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod optimizer;
pub mod sensitivity;

pub use criterion::{efficiency, factorized_objective, ApproximateDesign, CriterionContext};
pub use error::{Error, Result, ValidationError, ValidationErrors};
pub use failure::{joint_cdf_from_marginals, FailureSystem, Quantile, TimePolynomial};
pub use model::{
    validate_system, ComponentSpec, DesignRegion, Interval, Model, ModelSpec, Monomial,
};
pub use optimizer::{
    consolidate, equivalence_report, make_grid, multiplicative, optimize,
    product_extrapolation_design, reported_support, verification_grid, EquivalenceReport,
    OptimizationResult, OptimizerOptions, ProductDesign, Solution,
};
pub use sensitivity::{
    balanced_vertex_design, sweep, RowStatus, SweepResult, SweepRow, SweepSpec, SweepTarget,
};
