//! Semismooth* Newton methods for generalized equations `0 ∈ f(x) + ∂q(x)`.
//!
//! `f` is a smooth map `ℝⁿ → ℝⁿ` with a dense Jacobian and `q` is separable,
//! convex and piecewise linear-quadratic, so that each `∂q_i` has a monotone
//! polygonal graph. The crate provides
//!
//! - the problem model ([`problem`], [`polyline`], [`maps`]) including the
//!   approximation step `u_γ(x)` and the residual `r_γ(x)`,
//! - the local Newton method ([`ssn`]),
//! - forward-backward, Douglas-Rachford and hyperplane-projection operators
//!   ([`splitting`]),
//! - globalized drivers combining both ([`globalize`]),
//! - seeded random problem families and diagnostics ([`probgen`]),
//! - a JSON problem format ([`serial`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod globalize;
pub mod maps;
pub mod polyline;
pub mod probgen;
pub mod problem;
pub mod serial;
pub mod splitting;
pub mod ssn;

pub use error::{Error, Result};
pub use globalize::{
    DeltaRule, GammaRule, Method, RunReport, RunStatus, SolverConfig, StepKind, TraceRow,
};
pub use polyline::CoordinatePolyline;
pub use problem::{ApproxResult, EvalPoint, GeProblem, SeparableSubdifferential, SmoothMap};
pub use serial::{FSpec, ProblemSpec};
