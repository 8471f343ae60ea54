//! Precautionary effects of learning in two-stage decisions.
//!
//! An agent chooses `a`, observes a signal about a finite state, then chooses
//! `b`. The crate computes the value of a signal, compares first-stage optima
//! under more and less informative signals, and checks the convex-analytic
//! conditions under which a finer signal lowers the optimal first decision.
//!
//! * [`prob`]: distributions, joint signal models, garblings and the
//!   convex-function test of informativeness.
//! * [`geometry`]: payoff sets, support functions, Minkowski sums,
//!   star-differences and a sampled convexity probe.
//! * [`decision`]: the Epstein functional, signal values, first-stage
//!   optimization and the precautionary comparison.
//! * [`zoo`]: literature model families and their first-order certificates.
//! * [`experiments`]: JSON-configured batch runs with reproducible reports.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decision;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod prob;
pub mod seeding;
pub mod zoo;

pub use decision::{
    delta_value, epstein_j, inner_solve, monotonicity_scan, optimize_first, payoff_set,
    precautionary_compare, signal_value, DecisionModel, FeasibleSet, Monotonicity, OptResult,
    PrecautionReport, SolverConfig,
};
pub use error::{Error, Result};
pub use geometry::{
    convexity_probe, decomposition_certificate, minkowski_sum, star_difference, ConvexityKind,
    ConvexityVerdict, PayoffSet, VERDICT_TOL,
};
pub use prob::{blackwell_sample_test, Dist, Garbling, JointSignalModel, MaxAffine, StateSpace};
pub use zoo::{
    build_model, foc_certificate, gjt_identity_check, CatalogFn, FamilyKind, FamilySpec,
    FocCertificate,
};
