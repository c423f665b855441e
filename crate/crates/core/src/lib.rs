//! Subspace orderings for the method of alternating projections.
//!
//! Given closed subspaces `M_1, .., M_N` and an ordering `sigma`, the
//! iteration `x -> P_sigma(N) ... P_sigma(1) x` converges to the projection
//! onto the intersection at a rate governed by the cycle product of pairwise
//! Friedrichs numbers. This crate computes those numbers ([`subspace`]),
//! works with Friedrichs matrices and realizes any admissible matrix by
//! concrete subspaces ([`fmatrix`]), compares the greedy ordering against the
//! exact optimum ([`ordering`]), simulates the iteration ([`mapsim`]) and
//! generates the standard instances ([`examples`]).

pub mod error;
pub mod examples;
pub mod fmatrix;
pub mod io;
pub mod mapsim;
pub mod ordering;
pub mod subspace;

pub use error::{Error, Result};
pub use fmatrix::{Constellation, FriedrichsMatrix};
pub use mapsim::ConvergenceCurve;
pub use ordering::{CycleOrdering, Permutation, SuboptimalityReport, WeightedGraph};
pub use subspace::{Frame, Operator, Scalar, ScalarField, DEFAULT_TOL};
