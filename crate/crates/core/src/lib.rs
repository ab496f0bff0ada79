//! Logical clustering of timed traces.
//!
//! Traces are projected onto the parameter space of a monotonic parametric
//! STL template, the projections are clustered, and every cluster is
//! described by a ground STL formula and a few representative traces.

pub mod clustering;
pub mod formula;
pub mod learning;
pub mod projection;
pub mod semantics;
pub mod templates;
pub mod trace;
