//! Brouwer degree and local Morse cohomology of proper gradient vector
//! fields on `R^n`.
//!
//! Two proper vector fields are homotopic through proper maps exactly when
//! their degrees agree. For gradient fields the local Morse cohomology of an
//! isolating ball is a finer invariant: fields with equal degree but
//! different cohomology are homotopic, yet not through proper gradients.
//! This crate computes both invariants for fields given as expressions.
//!
//! The pipeline for one field is
//! [`field`] → [`isolate`] → [`critical`] → [`flow`] → [`morse`], and
//! [`pipeline`] runs it end to end.

pub mod critical;
pub mod expr;
pub mod field;
pub mod flow;
pub mod gf2;
pub mod isolate;
pub mod morse;
pub mod pipeline;
pub mod sampling;

pub use critical::{brouwer_degree, find_critical_points, CriticalPoint, DegreeReport};
pub use expr::{parse, Expr, ParseError};
pub use field::{FieldFamily, ScalarField};
pub use isolate::IsolatingBall;
pub use morse::{betti_numbers, build_complex, obstruction_verdict, MorseComplex, MorseReport};
pub use pipeline::{analyze, compare, AnalysisConfig, CompareReport, PipelineError};
