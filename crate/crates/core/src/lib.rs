//! Exhaustive model-based testing for actor-model distributed systems.
//!
//! The pipeline has three stages. [`model::explore`] enumerates the bounded
//! state space of an executable reference model. [`tsg`] turns the resulting
//! transition graph into root-anchored paths that cover every edge.
//! [`conformance`] replays each path against the real actors inside the
//! single-threaded [`actor::Emulator`] and compares states after every step.

pub mod actor;
pub mod cli;
pub mod conformance;
pub mod format;
pub mod model;
pub mod systems;
pub mod tsg;
pub mod value;
