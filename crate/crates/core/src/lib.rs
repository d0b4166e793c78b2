//! Tests for the missing-completely-at-random (MCAR) assumption in
//! partially observed functional data.
//!
//! A sample of curves on a common grid, each observed only on a subset of
//! the domain, is split into two groups by a rule that depends on the
//! observation patterns alone (complete vs. incomplete, or by the measure
//! of the observation set). Under MCAR the groups share the same
//! conditional distributions, so the library compares available-case
//! group means (L² and sup-norm statistics) and empirical distribution
//! surfaces (a Cramér–von Mises statistic), calibrated either by sampling
//! the asymptotic limit laws or by a group-wise bootstrap. Simultaneous
//! confidence bands for the group mean difference come from the same
//! machinery.

pub mod bootstrap;
pub mod error;
pub mod estimators;
pub mod partition;
pub mod plot;
pub mod rng;
pub mod sample_model;
pub mod simulation;
pub mod spectral;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use error::Error;
pub use partition::{Group, GroupLabels};
pub use sample_model::{FunctionalSample, Grid, SubdomainIndex};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
