//! Exact-arithmetic workbench for C-pair structure over function fields:
//! coefficient rings Z/l^m, an algebraic closure of a prime field, rational
//! function fields in one or two variables, flag valuations, Galois-side
//! functionals, a three-valued C-pair engine, and a bounded model checker
//! for the definable inertia/decomposition predicates.
//!
//! The library is organized bottom-up:
//!
//! * [`coeff`] — coefficient rings, level projections/lifts, the bound
//!   constants, and the cancellation principle.
//! * [`groundfield`] — the algebraic closure of F_p as a dynamic tower of
//!   finite fields with deterministic compatible embeddings.
//! * [`funcfield`] — exact rational arithmetic in one or two variables,
//!   orders along curves, restriction to lines, and the bounded
//!   test-element stream.
//! * [`valuations`] — flag valuations with lexicographic value groups.
//! * [`galois`] — characters in normal form with structural membership in
//!   minimized inertia/decomposition.
//! * [`cpairs`] — the certify-then-falsify C-pair engine.
//! * [`modelchecker`] — finite two-sorted universes and the definable
//!   predicates with bounded-quantifier semantics.
//! * [`scenario`] / [`runner`] — the plain-text scenario format and the
//!   deterministic report-producing executor behind the CLI.

pub mod coeff;
pub mod context;
pub mod cpairs;
pub mod error;
pub mod funcfield;
pub mod galois;
pub mod groundfield;
pub mod modelchecker;
pub mod runner;
pub mod scenario;
pub mod valuations;

pub use error::{Error, Result};
