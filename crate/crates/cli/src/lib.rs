//! Command-line harness and evaluation server for the fbpp solvers.

pub mod harness;
pub mod protocol;
