//! Core library of the secret-key workbench: exact finite-alphabet
//! information measures, key-rate region evaluation and optimization for two
//! terminals with a rate-limited public channel and a rate-limited secure
//! link, and a finite-blocklength simulator of the layered random-binning
//! scheme that achieves the region.
//!
//! Everything is deterministic for a fixed seed: parallel sections reduce
//! their results in a fixed order, never by completion time.

pub mod codec;
pub mod error;
pub mod prob;
pub mod region;

pub use error::{Error, Result};
pub use prob::{Axis, Channel, Pmf};
pub use region::{
    AuxiliaryPair, Baseline, JointSource, OptimizerConfig, RateConstraints, RegionPoint,
    RegionTerms,
};
