//! Group assignment from observation patterns.
//!
//! Every curve is labelled A or B as a function of its observation mask
//! alone: complete vs. incomplete, or by thresholding the measure of the
//! observation set. External labels are accepted through the CLI, with
//! the caveat that mask-determinism cannot be checked for them.

use crate::error::Error;
use crate::sample_model::{observed_measure, FunctionalSample, SubdomainIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    A,
    B,
}

/// The rule that generated a set of labels.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionRule {
    /// A = complete curves, B = incomplete.
    Complete,
    /// A = curves with observed measure >= delta.
    Measure(f64),
    /// Labels supplied externally; mask-determinism is not verifiable.
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupLabels {
    labels: Vec<Group>,
    rule: PartitionRule,
}

impl GroupLabels {
    fn validated(labels: Vec<Group>, rule: PartitionRule) -> Result<Self, Error> {
        let n_a = labels.iter().filter(|&&g| g == Group::A).count();
        if n_a == 0 || n_a == labels.len() {
            let missing = if n_a == 0 { "A" } else { "B" };
            return Err(Error::AssumptionViolation(format!(
                "group {missing} is empty (n_A = {n_a}, n_B = {})",
                labels.len() - n_a
            )));
        }
        Ok(GroupLabels { labels, rule })
    }

    pub fn external(labels: Vec<Group>) -> Result<Self, Error> {
        Self::validated(labels, PartitionRule::External)
    }

    pub fn labels(&self) -> &[Group] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> Group {
        self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rule(&self) -> &PartitionRule {
        &self.rule
    }

    pub fn group_size(&self, group: Group) -> usize {
        self.labels.iter().filter(|&&g| g == group).count()
    }

    /// Labels with A and B exchanged; useful for symmetry checks.
    pub fn swapped(&self) -> Self {
        GroupLabels {
            labels: self
                .labels
                .iter()
                .map(|g| match g {
                    Group::A => Group::B,
                    Group::B => Group::A,
                })
                .collect(),
            rule: PartitionRule::External,
        }
    }
}

/// A = curves observed on the whole grid, B = the rest.
pub fn partition_complete(sample: &FunctionalSample) -> Result<GroupLabels, Error> {
    let labels = (0..sample.n())
        .map(|i| {
            if sample.mask_row(i).iter().all(|&m| m == 1) {
                Group::A
            } else {
                Group::B
            }
        })
        .collect();
    GroupLabels::validated(labels, PartitionRule::Complete)
}

/// A = curves whose observed measure is at least `delta`, B = the rest.
pub fn partition_by_measure(sample: &FunctionalSample, delta: f64) -> Result<GroupLabels, Error> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!(
            "measure threshold delta must lie in (0,1], got {delta}"
        )));
    }
    let labels = (0..sample.n())
        .map(|i| {
            let m = observed_measure(sample, i).expect("index in range");
            if m >= delta {
                Group::A
            } else {
                Group::B
            }
        })
        .collect();
    GroupLabels::validated(labels, PartitionRule::Measure(delta))
}

/// Parse one label per line, values `A` or `B`.
pub fn labels_from_lines(text: &str) -> Result<GroupLabels, Error> {
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "A" | "a" => labels.push(Group::A),
            "B" | "b" => labels.push(Group::B),
            other => {
                return Err(Error::Config(format!(
                    "label file line {}: expected A or B, got {:?}",
                    idx + 1,
                    other
                )))
            }
        }
    }
    GroupLabels::external(labels)
}

/// Empirical check of the partition assumptions over the testable
/// subdomain.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub n_a: usize,
    pub n_b: usize,
    /// Minimum per-column observed count over the kept columns, per group.
    pub min_count_a: usize,
    pub min_count_b: usize,
    /// Kept columns at which some group has no observation.
    pub empty_columns: Vec<usize>,
    pub pass: bool,
}

/// Group counts and per-column coverage over the kept columns. Passes iff
/// both groups are non-empty and every kept column is observed at least
/// once in each group.
pub fn validate_assumption(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
) -> AssumptionReport {
    let n_a = labels.group_size(Group::A);
    let n_b = labels.group_size(Group::B);
    let mut min_a = usize::MAX;
    let mut min_b = usize::MAX;
    let mut empty_columns = Vec::new();
    for &j in &subdomain.kept {
        let mut count_a = 0;
        let mut count_b = 0;
        for i in 0..sample.n() {
            if sample.observed(i, j) {
                match labels.label(i) {
                    Group::A => count_a += 1,
                    Group::B => count_b += 1,
                }
            }
        }
        min_a = min_a.min(count_a);
        min_b = min_b.min(count_b);
        if count_a == 0 || count_b == 0 {
            empty_columns.push(j);
        }
    }
    let pass = n_a >= 1 && n_b >= 1 && empty_columns.is_empty();
    AssumptionReport {
        n_a,
        n_b,
        min_count_a: if min_a == usize::MAX { 0 } else { min_a },
        min_count_b: if min_b == usize::MAX { 0 } else { min_b },
        empty_columns,
        pass,
    }
}
