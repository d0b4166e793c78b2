//! Available-case estimators over the testable subdomain.
//!
//! Group means with empirical observation probabilities, empirical cdf
//! surfaces, the pooled covariance kernel of the normalized mean
//! difference, the matrixized distributional covariance at Monte Carlo
//! points, and the Gaussian reference measure for the distributional test.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::partition::{Group, GroupLabels};
use crate::sample_model::{FunctionalSample, SubdomainIndex};

/// Default number of Monte Carlo points for the matrixized distributional
/// covariance.
pub const DEFAULT_K_POINTS: usize = 200;

/// Available-case group mean over the kept columns.
#[derive(Debug, Clone)]
pub struct MeanEstimate {
    pub mu: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub group: Group,
}

/// Available-case empirical cdf surface over (kept column, z-grid point),
/// row-major with the z index fastest.
#[derive(Debug, Clone)]
pub struct EcdfEstimate {
    pub f: Vec<f64>,
    pub z_grid: Vec<f64>,
    pub group: Group,
}

impl EcdfEstimate {
    #[inline]
    pub fn at(&self, kept_idx: usize, z_idx: usize) -> f64 {
        self.f[kept_idx * self.z_grid.len() + z_idx]
    }
}

/// Covariance kernel of sqrt(n) (mu_A - mu_B) on the kept columns.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub k: Vec<f64>,
    pub dim: usize,
    pub quadrature_weight: f64,
}

/// Matrixized distributional covariance at Monte Carlo points.
#[derive(Debug, Clone)]
pub struct RhoMatrix {
    pub rho: Vec<f64>,
    pub dim: usize,
    /// Pairs (position into the kept columns, z value).
    pub mc_points: Vec<(usize, f64)>,
    /// Lebesgue measure of the testable subdomain.
    pub domain_length: f64,
}

/// Gaussian reference measure nu = N(theta, tau^2) for the
/// distributional statistic.
#[derive(Debug, Clone, Copy)]
pub struct NuMeasure {
    pub theta: f64,
    pub tau2: f64,
}

impl NuMeasure {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.theta + self.tau2.sqrt() * z
    }
}

fn check_inputs(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
) -> Result<(), Error> {
    if labels.len() != sample.n() {
        return Err(Error::Dimension(format!(
            "labels of length {} do not match sample of size {}",
            labels.len(),
            sample.n()
        )));
    }
    if subdomain.is_empty() {
        return Err(Error::Dimension("empty subdomain".into()));
    }
    if let Some(&j) = subdomain.kept.iter().find(|&&j| j >= sample.p()) {
        return Err(Error::Dimension(format!(
            "subdomain column {j} out of range for p = {}",
            sample.p()
        )));
    }
    Ok(())
}

/// mu_hat_g and p_hat_g on the kept columns.
///
/// p_hat[j] = (1/n) sum_i O_i(t_j) 1{group}, and mu_hat[j] averages the
/// observed values of the group at t_j.
pub fn group_mean(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    group: Group,
) -> Result<MeanEstimate, Error> {
    check_inputs(sample, labels, subdomain)?;
    let n = sample.n();
    let m = subdomain.len();
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for i in 0..n {
        if labels.label(i) != group {
            continue;
        }
        let row = sample.value_row(i);
        let mask = sample.mask_row(i);
        for (jj, &j) in subdomain.kept.iter().enumerate() {
            if mask[j] == 1 {
                sums[jj] += row[j];
                counts[jj] += 1;
            }
        }
    }
    let mut mu = vec![0.0; m];
    let mut p_hat = vec![0.0; m];
    for jj in 0..m {
        if counts[jj] == 0 {
            return Err(Error::DegenerateColumn {
                col: subdomain.kept[jj],
            });
        }
        p_hat[jj] = counts[jj] as f64 / n as f64;
        mu[jj] = sums[jj] / counts[jj] as f64;
    }
    Ok(MeanEstimate { mu, p_hat, group })
}

/// F_hat_g(t_j, z_m) over the kept columns and an ascending z grid.
pub fn ecdf_surface(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    group: Group,
    z_grid: &[f64],
) -> Result<EcdfEstimate, Error> {
    check_inputs(sample, labels, subdomain)?;
    if z_grid.is_empty() {
        return Err(Error::Config("z grid must be nonempty".into()));
    }
    if z_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("z grid must be ascending".into()));
    }
    let m = subdomain.len();
    let nz = z_grid.len();
    let mut f = vec![0.0; m * nz];
    for (jj, &j) in subdomain.kept.iter().enumerate() {
        let mut count = 0usize;
        // Histogram over lower-bound positions in the z grid.
        let mut buckets = vec![0usize; nz + 1];
        for i in 0..sample.n() {
            if labels.label(i) != group || !sample.observed(i, j) {
                continue;
            }
            count += 1;
            let x = sample.value(i, j);
            let pos = z_grid.partition_point(|&z| z < x);
            buckets[pos] += 1;
        }
        if count == 0 {
            return Err(Error::DegenerateColumn { col: j });
        }
        let mut cum = 0usize;
        for mz in 0..nz {
            cum += buckets[mz];
            f[jj * nz + mz] = cum as f64 / count as f64;
        }
    }
    Ok(EcdfEstimate {
        f,
        z_grid: z_grid.to_vec(),
        group,
    })
}

/// Pooled covariance kernel estimate of sqrt(n) (mu_A - mu_B).
///
/// Residuals are taken against the curve's own group mean and scaled by
/// the group's observation probabilities; the estimate stays consistent
/// for the covariance of the normalized mean difference even when the
/// observation mechanism depends on the data.
pub fn covariance_kernel_hat(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
) -> Result<KernelMatrix, Error> {
    check_inputs(sample, labels, subdomain)?;
    let mean_a = group_mean(sample, labels, subdomain, Group::A)?;
    let mean_b = group_mean(sample, labels, subdomain, Group::B)?;
    let n = sample.n();
    let m = subdomain.len();
    let mut k = vec![0.0; m * m];
    let mut w = vec![0.0; m];
    for i in 0..n {
        let est = match labels.label(i) {
            Group::A => &mean_a,
            Group::B => &mean_b,
        };
        let row = sample.value_row(i);
        let mask = sample.mask_row(i);
        for (jj, &j) in subdomain.kept.iter().enumerate() {
            w[jj] = if mask[j] == 1 {
                (row[j] - est.mu[jj]) / est.p_hat[jj]
            } else {
                0.0
            };
        }
        for jj in 0..m {
            let wj = w[jj];
            if wj == 0.0 {
                continue;
            }
            let krow = &mut k[jj * m..(jj + 1) * m];
            for ll in jj..m {
                krow[ll] += wj * w[ll];
            }
        }
    }
    let nf = n as f64;
    for jj in 0..m {
        for ll in jj..m {
            let v = k[jj * m + ll] / nf;
            k[jj * m + ll] = v;
            k[ll * m + jj] = v;
        }
    }
    Ok(KernelMatrix {
        k,
        dim: m,
        quadrature_weight: sample.grid().spacing(),
    })
}

/// Matrixized distributional covariance at explicit (kept position, z)
/// points.
pub fn rho_hat_at_points(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    points: &[(usize, f64)],
) -> Result<RhoMatrix, Error> {
    check_inputs(sample, labels, subdomain)?;
    let kp = points.len();
    if kp < 2 {
        return Err(Error::Config(format!(
            "need at least 2 Monte Carlo points, got {kp}"
        )));
    }
    if let Some(&(pos, _)) = points.iter().find(|&&(pos, _)| pos >= subdomain.len()) {
        return Err(Error::Dimension(format!(
            "Monte Carlo point position {pos} out of range for subdomain of size {}",
            subdomain.len()
        )));
    }
    let n = sample.n();
    let nf = n as f64;

    // Per point: group observation probabilities and ecdf values.
    let mut p_hat = vec![[0.0f64; 2]; kp];
    let mut f_hat = vec![[0.0f64; 2]; kp];
    for (idx, &(pos, z)) in points.iter().enumerate() {
        let j = subdomain.kept[pos];
        let mut counts = [0usize; 2];
        let mut les = [0usize; 2];
        for i in 0..n {
            if !sample.observed(i, j) {
                continue;
            }
            let g = labels.label(i) as usize;
            counts[g] += 1;
            if sample.value(i, j) <= z {
                les[g] += 1;
            }
        }
        for g in 0..2 {
            if counts[g] == 0 {
                return Err(Error::DegenerateColumn { col: j });
            }
            p_hat[idx][g] = counts[g] as f64 / nf;
            f_hat[idx][g] = les[g] as f64 / counts[g] as f64;
        }
    }

    let mut rho = vec![0.0; kp * kp];
    let mut w = vec![0.0; kp];
    for i in 0..n {
        let g = labels.label(i) as usize;
        for (idx, &(pos, z)) in points.iter().enumerate() {
            let j = subdomain.kept[pos];
            w[idx] = if sample.observed(i, j) {
                let ind = if sample.value(i, j) <= z { 1.0 } else { 0.0 };
                (ind - f_hat[idx][g]) / p_hat[idx][g]
            } else {
                0.0
            };
        }
        for a in 0..kp {
            let wa = w[a];
            if wa == 0.0 {
                continue;
            }
            let rrow = &mut rho[a * kp..(a + 1) * kp];
            for b in a..kp {
                rrow[b] += wa * w[b];
            }
        }
    }
    for a in 0..kp {
        for b in a..kp {
            let v = rho[a * kp + b] / nf;
            rho[a * kp + b] = v;
            rho[b * kp + a] = v;
        }
    }
    Ok(RhoMatrix {
        rho,
        dim: kp,
        mc_points: points.to_vec(),
        domain_length: subdomain.domain_length(sample.grid()),
    })
}

/// Draw K Monte Carlo points (t uniform over kept columns, with
/// replacement; z from nu) and evaluate the matrixized covariance there.
pub fn rho_hat<R: Rng>(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    k_points: usize,
    nu: &NuMeasure,
    rng: &mut R,
) -> Result<RhoMatrix, Error> {
    if k_points < 2 {
        return Err(Error::Config(format!(
            "need at least 2 Monte Carlo points, got {k_points}"
        )));
    }
    let points: Vec<(usize, f64)> = (0..k_points)
        .map(|_| (rng.gen_range(0..subdomain.len()), nu.sample(rng)))
        .collect();
    rho_hat_at_points(sample, labels, subdomain, &points)
}

/// Location and scale of the Gaussian reference measure, estimated from
/// the pooled available data: theta is the subdomain average of the
/// pooled column means, tau^2 the largest pooled column variance.
pub fn estimate_nu(
    sample: &FunctionalSample,
    subdomain: &SubdomainIndex,
) -> Result<NuMeasure, Error> {
    if subdomain.is_empty() {
        return Err(Error::Dimension("empty subdomain".into()));
    }
    let n = sample.n();
    let mut theta_sum = 0.0;
    let mut tau2 = 0.0f64;
    for &j in &subdomain.kept {
        let mut count = 0usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            if sample.observed(i, j) {
                let x = sample.value(i, j);
                count += 1;
                sum += x;
                sumsq += x * x;
            }
        }
        if count < 2 {
            return Err(Error::VarianceUndefined { col: j, count });
        }
        let mean = sum / count as f64;
        let var = (sumsq - sum * mean) / (count - 1) as f64;
        theta_sum += mean;
        tau2 = tau2.max(var);
    }
    if tau2 <= 0.0 {
        return Err(Error::DegenerateVariance { tau2 });
    }
    Ok(NuMeasure {
        theta: theta_sum / subdomain.len() as f64,
        tau2,
    })
}

/// Reporting grid for cdf surfaces: 101 equispaced points spanning the
/// pooled observed range padded by a quarter standard deviation of nu.
pub fn default_z_grid(sample: &FunctionalSample, subdomain: &SubdomainIndex, tau: f64) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..sample.n() {
        for &j in &subdomain.kept {
            if sample.observed(i, j) {
                let x = sample.value(i, j);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    let lo = lo - 0.25 * tau;
    let hi = hi + 0.25 * tau;
    let step = (hi - lo) / 100.0;
    (0..=100).map(|k| lo + k as f64 * step).collect()
}
