//! Reference systems: each pairs an executable model with an actor
//! implementation that must conform to it.

pub mod kv;
pub mod vr;
