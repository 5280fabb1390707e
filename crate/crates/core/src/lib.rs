//! Two-sided bounds on the negative eigenvalues of self-adjoint Laplacians on
//! finite metric graphs.
//!
//! A problem consists of a [`graph::MetricGraph`] and boundary conditions
//! `AΨ̲ + BΨ̲' = 0` ([`conditions::BoundarySpec`]). The conditions are brought
//! to the canonical form `(P, L)`, from which the number of negative
//! eigenvalues and explicit intervals for each `κ_j = √(−λ_j)` follow
//! ([`bounds`]). The bounds are checked against an exact nonlinear eigensolver
//! ([`nonlinear`]) and an independent finite element discretization ([`fem`]).

pub mod bounds;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod fem;
pub mod graph;
pub mod linalg;
pub mod nonlinear;
pub mod spectral;
pub mod tolerance;
pub mod transcendental;

pub use error::{Error, Result};
