//! Coordination cost laboratory.
//!
//! Closed-form protocol-length bounds ([`bounds`], [`hierarchy`]), the
//! statistical-mechanics quantities of agent ensembles ([`population`]),
//! reflexive coordination dynamics and phase-transition sweeps
//! ([`dynamics`]), findability-vs-accuracy selection pressure with lattice
//! cascades ([`findability`]), and preference/gradient aggregation
//! diagnostics ([`aggregation`]).
//!
//! Batch workloads run on rayon through [`exec::Execution`] when the default
//! `parallel` feature is on and fall back to plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod findability;
pub mod hierarchy;
pub mod population;

pub use error::{CoordError, Result};
pub use exec::Execution;
