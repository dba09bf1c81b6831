//! Sampling algorithms, experiment harness, and file formats for
//! fixed-confidence best-arm identification in rare-event bandits.

pub mod algorithms;
pub mod suite;

pub use rarebai_core as core;
