//! Fixed-confidence best-arm identification for rare-event bandits.
//!
//! Arms pay large rewards with tiny probabilities; this crate carries the
//! instance model, the exact and Poisson-approximate lower-bound solvers,
//! the asymptotic weight classification, and the stopping statistic shared
//! by the sampling algorithms in the companion `rarebai` crate.
//!
//! The crate is `no_std` (with `alloc`); the default `std` feature only
//! switches float intrinsics.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod approx;
pub mod asymptotic;
pub mod dist;
pub mod exact;
pub mod glr;
pub mod instance;
pub mod kinf;
pub mod math;
pub mod root;

pub use dist::FiniteDistribution;
pub use instance::{validate, ArmSpec, BanditInstance, EmpiricalState, ValidationReport};
