//! Dual averaging with ω-potential regularizers on weighted grids.
//!
//! A compact domain is discretized into weighted cells ([`GridDomain`]);
//! densities and cumulative losses are grid functions on it. Each round the
//! learner plays the minimizer of `⟨L, x⟩ + ψ(x)/η` where `ψ` is the Csiszár
//! divergence generated by a [`Potential`], computed by [`project`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod domain;
pub mod engine;
pub mod error;
pub mod losses;
pub mod potential;
pub mod projection;
pub mod quadrature;
pub mod regret;
pub mod schedule;

pub use divergence::{bregman, csiszar, csiszar_gradient, lp_norm, pair, Density, DualVector};
pub use domain::{fatness_witness, AxisBox, GridDomain, Shape};
pub use engine::{run, run_with, sample_play, PlaySampler, RoundRecord, RunOptions};
pub use error::{Error, Result};
pub use losses::{
    measure_constants, FixedSequence, LossFamily, LossGenerator, LossSource, LossSpec,
    MeasuredConstants,
};
pub use potential::{
    check_pinsker_conditions, validate_potential, ConvexityCertificate, GrowthCertificate,
    PinskerReport, Potential, PotentialKind, ValidationReport,
};
pub use projection::{conjugate_value, mass, oracle_project, project, xi, ProjectionResult};
pub use regret::{
    benchmark, bound_curve, bound_series, fit_exponent, Benchmark, BoundParams, RegretTrace,
};
pub use schedule::{Schedule, ScheduleKind};
