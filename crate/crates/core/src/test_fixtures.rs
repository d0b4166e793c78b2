//! Small hand-checkable samples shared across module tests.

use crate::partition::{Group, GroupLabels};
use crate::sample_model::{restrict_domain, FunctionalSample, Grid, SubdomainIndex};

/// Grid (0.5, 1.0); A: (1,2) and (3,4) complete; B: (5,.) observed at
/// t = 0.5 only, (7,8) complete. Group means differ by (-4, -5).
pub fn four_curve_fixture() -> (FunctionalSample, GroupLabels, SubdomainIndex) {
    let grid = Grid::equispaced(2);
    let values = vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.0, 7.0, 8.0];
    let mask = vec![1, 1, 1, 1, 1, 0, 1, 1];
    let sample = FunctionalSample::new(grid, values, mask, 4).unwrap();
    let labels = GroupLabels::external(vec![Group::A, Group::A, Group::B, Group::B]).unwrap();
    let subdomain = restrict_domain(&sample, &labels, 0.1).unwrap();
    (sample, labels, subdomain)
}

/// Two identical fully observed curves per group.
pub fn identical_groups_fixture() -> (FunctionalSample, GroupLabels, SubdomainIndex) {
    let grid = Grid::equispaced(3);
    let curve = [0.5, -1.0, 2.0];
    let mut values = Vec::new();
    for _ in 0..4 {
        values.extend_from_slice(&curve);
    }
    let mask = vec![1u8; 12];
    let sample = FunctionalSample::new(grid, values, mask, 4).unwrap();
    let labels =
        GroupLabels::external(vec![Group::A, Group::B, Group::A, Group::B]).unwrap();
    let subdomain = restrict_domain(&sample, &labels, 0.1).unwrap();
    (sample, labels, subdomain)
}
