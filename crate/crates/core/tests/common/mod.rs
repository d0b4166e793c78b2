//! Shared fixtures and straight-from-definition reference estimators.
//!
//! The reference implementations below are deliberately naive scalar
//! loops over the defining formulas, written independently of the
//! library's vectorized code paths, so agreement is meaningful.

use fdmcar::partition::{Group, GroupLabels};
use fdmcar::sample_model::{restrict_domain, FunctionalSample, Grid, SubdomainIndex};

/// Five partially observed curves on four grid points; every column keeps
/// at least one observation per group, so the whole grid is testable.
pub fn micro_fixture() -> (FunctionalSample, GroupLabels, SubdomainIndex) {
    let grid = Grid::equispaced(4);
    #[rustfmt::skip]
    let values = vec![
        1.0, 2.0, 0.0, 4.0,
        0.5, 0.0, 1.5, 2.5,
       -1.0, 0.0, 1.0, 0.0,
        2.0, 3.0, 4.0, 5.0,
        0.0, 1.0, 2.0, 3.0,
    ];
    #[rustfmt::skip]
    let mask = vec![
        1, 1, 0, 1,
        1, 0, 1, 1,
        1, 1, 1, 0,
        1, 1, 1, 1,
        0, 1, 1, 1,
    ];
    let sample = FunctionalSample::new(grid, values, mask, 5).unwrap();
    let labels = GroupLabels::external(vec![
        Group::A,
        Group::A,
        Group::A,
        Group::B,
        Group::B,
    ])
    .unwrap();
    let subdomain = restrict_domain(&sample, &labels, 0.1).unwrap();
    assert_eq!(subdomain.kept, vec![0, 1, 2, 3]);
    (sample, labels, subdomain)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= tol * scale
}

/// p_hat_g(t_j) = (1/n) sum_i O_i(t_j) 1{i in g}.
pub fn oracle_p_hat(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    group: Group,
    j: usize,
) -> f64 {
    let mut count = 0.0;
    for i in 0..sample.n() {
        if labels.label(i) == group && sample.observed(i, j) {
            count += 1.0;
        }
    }
    count / sample.n() as f64
}

/// mu_hat_g(t_j) = (1/(n p_hat_g)) sum_i X_i O_i 1{i in g}.
pub fn oracle_mu(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    group: Group,
    j: usize,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..sample.n() {
        if labels.label(i) == group && sample.observed(i, j) {
            sum += sample.value(i, j);
        }
    }
    sum / (sample.n() as f64 * oracle_p_hat(sample, labels, group, j))
}

/// F_hat_g(t_j, z) = (1/(n p_hat_g)) sum_i 1{X_i <= z} O_i 1{i in g}.
pub fn oracle_ecdf(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    group: Group,
    j: usize,
    z: f64,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..sample.n() {
        if labels.label(i) == group && sample.observed(i, j) && sample.value(i, j) <= z {
            sum += 1.0;
        }
    }
    sum / (sample.n() as f64 * oracle_p_hat(sample, labels, group, j))
}

/// Pooled covariance kernel entry at kept columns (j, l).
pub fn oracle_kernel(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    j: usize,
    l: usize,
) -> f64 {
    let mut total = 0.0;
    for i in 0..sample.n() {
        let g = labels.label(i);
        if !(sample.observed(i, j) && sample.observed(i, l)) {
            continue;
        }
        let xj = sample.value(i, j) - oracle_mu(sample, labels, g, j);
        let xl = sample.value(i, l) - oracle_mu(sample, labels, g, l);
        total += xj * xl
            / (oracle_p_hat(sample, labels, g, j) * oracle_p_hat(sample, labels, g, l));
    }
    total / sample.n() as f64
}

/// Matrixized distributional covariance entry at points (j_a, z_a), (j_b, z_b).
pub fn oracle_rho(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    (ja, za): (usize, f64),
    (jb, zb): (usize, f64),
) -> f64 {
    let mut total = 0.0;
    for i in 0..sample.n() {
        let g = labels.label(i);
        if !(sample.observed(i, ja) && sample.observed(i, jb)) {
            continue;
        }
        let ind_a = if sample.value(i, ja) <= za { 1.0 } else { 0.0 };
        let ind_b = if sample.value(i, jb) <= zb { 1.0 } else { 0.0 };
        let ca = ind_a - oracle_ecdf(sample, labels, g, ja, za);
        let cb = ind_b - oracle_ecdf(sample, labels, g, jb, zb);
        total += ca * cb
            / (oracle_p_hat(sample, labels, g, ja) * oracle_p_hat(sample, labels, g, jb));
    }
    total / sample.n() as f64
}

/// n * sum over kept columns of (mu_A - mu_B)^2 * spacing.
pub fn oracle_stat_l2(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
) -> f64 {
    let mut total = 0.0;
    for &j in &subdomain.kept {
        let d = oracle_mu(sample, labels, Group::A, j) - oracle_mu(sample, labels, Group::B, j);
        total += d * d;
    }
    sample.n() as f64 * total * sample.grid().spacing()
}

/// sqrt(n) * max over kept columns of |mu_A - mu_B|.
pub fn oracle_stat_sup(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
) -> f64 {
    let mut max = 0.0f64;
    for &j in &subdomain.kept {
        let d = oracle_mu(sample, labels, Group::A, j) - oracle_mu(sample, labels, Group::B, j);
        max = max.max(d.abs());
    }
    (sample.n() as f64).sqrt() * max
}

/// n * average over z draws of sum over kept columns of the squared cdf
/// difference times the spacing.
pub fn oracle_stat_cvm(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    z_draws: &[f64],
) -> f64 {
    let mut total = 0.0;
    for &z in z_draws {
        for &j in &subdomain.kept {
            let d = oracle_ecdf(sample, labels, Group::A, j, z)
                - oracle_ecdf(sample, labels, Group::B, j, z);
            total += d * d;
        }
    }
    sample.n() as f64 * total * sample.grid().spacing() / z_draws.len() as f64
}
