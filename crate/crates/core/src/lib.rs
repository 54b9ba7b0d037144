//! Data-driven abductive inference of library specifications.
//!
//! Given verification queries extracted from a client program and blackbox
//! implementations of library functions and method predicates, the engine
//! infers a maximally weak, safe and consistent specification for every
//! library function, or a concrete input that breaks the client.

pub mod frontend;
pub mod inference;
pub mod learner;
pub mod logic;
pub mod runtime;
pub mod sexp;
pub mod smt;
