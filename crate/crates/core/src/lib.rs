//! Hardening test suites against simulated faults.
//!
//! A language model is asked to inject issue-specific faults into classes
//! under test. Faults that build and survive the existing suite are screened
//! for equivalence, and the survivors drive generation of new tests that are
//! only kept when they build, pass repeatedly on the original code and fail
//! on the fault.

pub mod corpus;
pub mod digest;
pub mod llm;
pub mod mutagen;
pub mod equiv;
pub mod testgen;
pub mod report;
pub mod config;
pub mod pipeline;
