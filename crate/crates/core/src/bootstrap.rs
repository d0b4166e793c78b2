//! Group-wise bootstrap calibration of the test statistics.
//!
//! Curves are resampled with replacement within each group, keeping the
//! group sizes and the testable subdomain fixed at their observed values.
//! For the mean statistics each replicate compares the group means of
//! curves centered by their own group mean, so replicates are drawn under
//! the null even when the groups differ. For the distributional statistic
//! each replicate compares the group cdf surfaces of the uncentered
//! resample against the observed surfaces.
//!
//! A replicate is degenerate when some kept column ends up with no
//! observation in one group; such replicates are redrawn from a fresh
//! substream, up to a fixed attempt budget per replicate, which keeps the
//! procedure deterministic and independent of thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::estimators::{ecdf_surface, estimate_nu, group_mean};
use crate::mcar_tests::{
    band_quantile, draw_z, mean_difference, pvalue, stat_cvm_given_z, stat_l2, stat_sup,
    BandSource, Calibration, ConfidenceBand, Method, TestConfig, TestResult,
};
use crate::partition::{Group, GroupLabels};
use crate::rng::{derive_seed, labels as stream, substream};
use crate::sample_model::{FunctionalSample, SubdomainIndex};

/// Redraw budget for a degenerate replicate.
pub const MAX_REDRAWS: usize = 100;

/// Attempt stride inside a replicate's substream index space; redraw
/// attempt `a` of replicate `b` uses substream index `b * STRIDE + a`.
const ATTEMPT_STRIDE: u64 = 128;

/// Restricted matrices shared by all replicates of one bootstrap run.
struct Engine {
    n: usize,
    m: usize,
    spacing: f64,
    /// Curve indices per group; `Group as usize` indexes this array.
    members: [Vec<usize>; 2],
    /// n×m restricted observation mask.
    obs: Vec<u8>,
    /// n×m values centered by the curve's own group mean; 0 where
    /// unobserved.
    centered: Vec<f64>,
    /// n×m raw restricted values; 0 where unobserved.
    raw: Vec<f64>,
}

impl Engine {
    fn new(
        sample: &FunctionalSample,
        labels: &GroupLabels,
        subdomain: &SubdomainIndex,
    ) -> Result<Self, Error> {
        let n = sample.n();
        let m = subdomain.len();
        let mean_a = group_mean(sample, labels, subdomain, Group::A)?;
        let mean_b = group_mean(sample, labels, subdomain, Group::B)?;
        let mut members = [Vec::new(), Vec::new()];
        let mut obs = vec![0u8; n * m];
        let mut centered = vec![0.0; n * m];
        let mut raw = vec![0.0; n * m];
        for i in 0..n {
            let g = labels.label(i);
            members[g as usize].push(i);
            let mu = match g {
                Group::A => &mean_a.mu,
                Group::B => &mean_b.mu,
            };
            let row = sample.value_row(i);
            let mask = sample.mask_row(i);
            for (jj, &j) in subdomain.kept.iter().enumerate() {
                if mask[j] == 1 {
                    obs[i * m + jj] = 1;
                    raw[i * m + jj] = row[j];
                    centered[i * m + jj] = row[j] - mu[jj];
                }
            }
        }
        Ok(Engine {
            n,
            m,
            spacing: sample.grid().spacing(),
            members,
            obs,
            centered,
            raw,
        })
    }

    /// Resampled indices for one group, in draw order.
    fn resample_group<R: Rng>(&self, group: usize, rng: &mut R) -> Vec<usize> {
        let pool = &self.members[group];
        (0..pool.len())
            .map(|_| pool[rng.gen_range(0..pool.len())])
            .collect()
    }

    /// Column sums and counts of `values` over the given curves; `None`
    /// when some column has no observation.
    fn column_means(&self, curves: &[usize], values: &[f64]) -> Option<Vec<f64>> {
        let m = self.m;
        let mut sums = vec![0.0; m];
        let mut counts = vec![0u32; m];
        for &i in curves {
            let obs = &self.obs[i * m..(i + 1) * m];
            let vals = &values[i * m..(i + 1) * m];
            for jj in 0..m {
                if obs[jj] == 1 {
                    sums[jj] += vals[jj];
                    counts[jj] += 1;
                }
            }
        }
        for jj in 0..m {
            if counts[jj] == 0 {
                return None;
            }
            sums[jj] /= counts[jj] as f64;
        }
        Some(sums)
    }

    /// One mean-test replicate: (L², sup) statistics of the centered
    /// resampled group mean difference.
    fn mean_replicate(&self, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
        let draw_a = self.resample_group(0, rng);
        let draw_b = self.resample_group(1, rng);
        let mu_a = self.column_means(&draw_a, &self.centered)?;
        let mu_b = self.column_means(&draw_b, &self.centered)?;
        let mut l2 = 0.0;
        let mut sup = 0.0f64;
        for (a, b) in mu_a.iter().zip(&mu_b) {
            let d = a - b;
            l2 += d * d;
            sup = sup.max(d.abs());
        }
        let nf = self.n as f64;
        Some((nf * l2 * self.spacing, nf.sqrt() * sup))
    }

    /// Resampled group cdf surface over (column, z) with z fastest;
    /// `ranks` holds, per curve and column, the number of z draws
    /// strictly below the value.
    fn resampled_surface(
        &self,
        curves: &[usize],
        ranks: &[u32],
        nz: usize,
    ) -> Option<Vec<f64>> {
        let m = self.m;
        let mut buckets = vec![0u32; m * (nz + 1)];
        let mut counts = vec![0u32; m];
        for &i in curves {
            let obs = &self.obs[i * m..(i + 1) * m];
            let r = &ranks[i * m..(i + 1) * m];
            for jj in 0..m {
                if obs[jj] == 1 {
                    buckets[jj * (nz + 1) + r[jj] as usize] += 1;
                    counts[jj] += 1;
                }
            }
        }
        let mut f = vec![0.0; m * nz];
        for jj in 0..m {
            if counts[jj] == 0 {
                return None;
            }
            let scale = 1.0 / counts[jj] as f64;
            let mut cum = 0u32;
            for mz in 0..nz {
                cum += buckets[jj * (nz + 1) + mz];
                f[jj * nz + mz] = cum as f64 * scale;
            }
        }
        Some(f)
    }

    /// One distributional replicate: the statistic of the doubly centered
    /// cdf difference against the observed surfaces.
    fn cvm_replicate(
        &self,
        rng: &mut ChaCha8Rng,
        ranks: &[u32],
        f_obs_a: &[f64],
        f_obs_b: &[f64],
        nz: usize,
    ) -> Option<f64> {
        let draw_a = self.resample_group(0, rng);
        let draw_b = self.resample_group(1, rng);
        let fa = self.resampled_surface(&draw_a, ranks, nz)?;
        let fb = self.resampled_surface(&draw_b, ranks, nz)?;
        let mut total = 0.0;
        for k in 0..self.m * nz {
            let d = (fa[k] - f_obs_a[k]) - (fb[k] - f_obs_b[k]);
            total += d * d;
        }
        Some(self.n as f64 * total * self.spacing / nz as f64)
    }
}

/// Run `bstar` replicates in parallel, redrawing degenerate ones.
fn replicate_draws<T, F>(bstar: usize, seed: u64, replicate: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Option<T> + Sync,
{
    (0..bstar)
        .into_par_iter()
        .map(|b| {
            for attempt in 0..MAX_REDRAWS {
                let idx = b as u64 * ATTEMPT_STRIDE + attempt as u64;
                let mut rng = substream(seed, stream::BOOT_REPLICATE, idx);
                if let Some(v) = replicate(&mut rng) {
                    return Ok(v);
                }
            }
            Err(Error::DegenerateReplicate {
                replicate: b,
                attempts: MAX_REDRAWS,
            })
        })
        .collect()
}

/// Both mean tests from one set of shared resamples.
pub fn bootstrap_mean_tests(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    config: &TestConfig,
) -> Result<(TestResult, TestResult), Error> {
    let engine = Engine::new(sample, labels, subdomain)?;
    let seed = derive_seed(config.seed, stream::BOOT_MEAN, 0);
    let pairs = replicate_draws(config.bstar, seed, |rng| engine.mean_replicate(rng))?;
    let (l2_draws, sup_draws): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let t_l2 = stat_l2(sample, labels, subdomain)?;
    let t_sup = stat_sup(sample, labels, subdomain)?;
    let make = |method, statistic, draws: Vec<f64>| -> Result<TestResult, Error> {
        Ok(TestResult {
            method,
            calibration: Calibration::Bootstrap,
            statistic,
            p_value: pvalue(statistic, &draws)?,
            q_used: 0,
            seed: config.seed,
            draws,
        })
    };
    Ok((
        make(Method::L2, t_l2, l2_draws)?,
        make(Method::Sup, t_sup, sup_draws)?,
    ))
}

/// Bootstrap calibration of one mean test.
pub fn bootstrap_mean_test(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    method: Method,
    config: &TestConfig,
) -> Result<TestResult, Error> {
    let (l2, sup) = bootstrap_mean_tests(sample, labels, subdomain, config)?;
    match method {
        Method::L2 => Ok(l2),
        Method::Sup => Ok(sup),
        Method::Cvm => Err(Error::Config(
            "the distributional test has its own bootstrap".into(),
        )),
    }
}

/// Bootstrap calibration of the distributional test. The z draws are
/// shared between the observed statistic and every replicate.
pub fn bootstrap_dist_test(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    config: &TestConfig,
) -> Result<TestResult, Error> {
    let nu = estimate_nu(sample, subdomain)?;
    let mut z_rng = substream(config.seed, stream::NU_DRAWS, 0);
    let z = draw_z(&nu, config.m_z, &mut z_rng);
    let statistic = stat_cvm_given_z(sample, labels, subdomain, &z)?;

    let engine = Engine::new(sample, labels, subdomain)?;
    let nz = z.len();
    // Number of z draws strictly below each observed value; the bucket a
    // curve falls into when building a resampled cdf surface.
    let mut ranks = vec![0u32; engine.n * engine.m];
    for i in 0..engine.n {
        for jj in 0..engine.m {
            if engine.obs[i * engine.m + jj] == 1 {
                let x = engine.raw[i * engine.m + jj];
                ranks[i * engine.m + jj] = z.partition_point(|&zv| zv < x) as u32;
            }
        }
    }
    let f_obs_a = ecdf_surface(sample, labels, subdomain, Group::A, &z)?.f;
    let f_obs_b = ecdf_surface(sample, labels, subdomain, Group::B, &z)?.f;

    let seed = derive_seed(config.seed, stream::BOOT_CVM, 0);
    let draws = replicate_draws(config.bstar, seed, |rng| {
        engine.cvm_replicate(rng, &ranks, &f_obs_a, &f_obs_b, nz)
    })?;
    Ok(TestResult {
        method: Method::Cvm,
        calibration: Calibration::Bootstrap,
        statistic,
        p_value: pvalue(statistic, &draws)?,
        q_used: 0,
        seed: config.seed,
        draws,
    })
}

/// All selected tests with bootstrap calibration; mean tests share their
/// resamples.
pub(crate) fn bootstrap_results(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    methods: &[Method],
    config: &TestConfig,
) -> Result<Vec<TestResult>, Error> {
    let want_l2 = methods.contains(&Method::L2);
    let want_sup = methods.contains(&Method::Sup);
    let mut results = Vec::new();
    if want_l2 || want_sup {
        let (l2, sup) = bootstrap_mean_tests(sample, labels, subdomain, config)?;
        if want_l2 {
            results.push(l2);
        }
        if want_sup {
            results.push(sup);
        }
    }
    if methods.contains(&Method::Cvm) {
        results.push(bootstrap_dist_test(sample, labels, subdomain, config)?);
    }
    Ok(results)
}

/// Simultaneous confidence band for the group mean difference from the
/// bootstrap sup draws, dual to the bootstrap sup test.
pub fn bootstrap_band(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    level: f64,
    config: &TestConfig,
) -> Result<ConfidenceBand, Error> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "band level must lie in (0,1), got {level}"
        )));
    }
    let (_, sup) = bootstrap_mean_tests(sample, labels, subdomain, config)?;
    let (_, _, center) = mean_difference(sample, labels, subdomain)?;
    let half_width = band_quantile(&sup.draws, 1.0 - level)? / (sample.n() as f64).sqrt();
    Ok(ConfidenceBand {
        center,
        half_width,
        level,
        source: BandSource::Bootstrap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_fixtures::{four_curve_fixture, identical_groups_fixture};
    use approx::assert_abs_diff_eq;

    fn small_config(bstar: usize, seed: u64) -> TestConfig {
        TestConfig {
            calibration: Calibration::Bootstrap,
            bstar,
            m_z: 16,
            k_points: 8,
            seed,
            ..TestConfig::default()
        }
    }

    #[test]
    fn mean_replicate_matches_hand_recomputation() {
        let (s, labels, sub) = four_curve_fixture();
        let engine = Engine::new(&s, &labels, &sub).unwrap();
        let seed = derive_seed(11, stream::BOOT_MEAN, 0);
        let mut rng = substream(seed, stream::BOOT_REPLICATE, 0);
        let (l2, sup) = engine.mean_replicate(&mut rng).unwrap();

        // Redraw the same indices from a fresh copy of the stream and
        // recompute the statistic from first principles.
        let mut rng2 = substream(seed, stream::BOOT_REPLICATE, 0);
        let draw_a: Vec<usize> = (0..2).map(|_| engine.members[0][rng2.gen_range(0..2)]).collect();
        let draw_b: Vec<usize> = (0..2).map(|_| engine.members[1][rng2.gen_range(0..2)]).collect();
        let mean_of = |curves: &[usize], jj: usize| {
            let mut sum = 0.0;
            let mut cnt = 0.0;
            for &i in curves {
                if engine.obs[i * engine.m + jj] == 1 {
                    sum += engine.centered[i * engine.m + jj];
                    cnt += 1.0;
                }
            }
            sum / cnt
        };
        let mut l2_ref = 0.0;
        let mut sup_ref = 0.0f64;
        for jj in 0..engine.m {
            let d = mean_of(&draw_a, jj) - mean_of(&draw_b, jj);
            l2_ref += d * d;
            sup_ref = sup_ref.max(d.abs());
        }
        l2_ref *= 4.0 * 0.5;
        sup_ref *= 2.0;
        assert_abs_diff_eq!(l2, l2_ref, epsilon = 1e-12);
        assert_abs_diff_eq!(sup, sup_ref, epsilon = 1e-12);
    }

    #[test]
    fn identical_curves_give_degenerate_draws_and_pvalue_one() {
        let (s, labels, sub) = identical_groups_fixture();
        let (l2, sup) = bootstrap_mean_tests(&s, &labels, &sub, &small_config(50, 3)).unwrap();
        assert!(l2.draws.iter().all(|&x| x == 0.0));
        assert!(sup.draws.iter().all(|&x| x == 0.0));
        assert_eq!(l2.p_value, 1.0);
        assert_eq!(sup.p_value, 1.0);
    }

    #[test]
    fn centering_makes_mean_draws_invariant_to_group_shifts() {
        let (s, labels, sub) = four_curve_fixture();
        let config = small_config(40, 7);
        let (l2_a, sup_a) = bootstrap_mean_tests(&s, &labels, &sub, &config).unwrap();
        // Shift every B curve by a constant: the observed statistics move
        // but the null draws are untouched.
        let shifted: Vec<f64> = s
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let i = k / s.p();
                if v.is_nan() || labels.label(i) == Group::A {
                    *v
                } else {
                    v + 100.0
                }
            })
            .collect();
        let s2 = FunctionalSample::new(s.grid().clone(), shifted, s.mask().to_vec(), s.n())
            .unwrap();
        let (l2_b, sup_b) = bootstrap_mean_tests(&s2, &labels, &sub, &config).unwrap();
        for (a, b) in l2_a.draws.iter().zip(&l2_b.draws) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        for (a, b) in sup_a.draws.iter().zip(&sup_b.draws) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert!(l2_b.statistic > l2_a.statistic);
    }

    #[test]
    fn bootstrap_runs_are_deterministic() {
        let (s, labels, sub) = four_curve_fixture();
        let config = small_config(30, 5);
        let r1 = bootstrap_dist_test(&s, &labels, &sub, &config).unwrap();
        let r2 = bootstrap_dist_test(&s, &labels, &sub, &config).unwrap();
        assert_eq!(r1.statistic.to_bits(), r2.statistic.to_bits());
        for (a, b) in r1.draws.iter().zip(&r2.draws) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let (l1, s1) = bootstrap_mean_tests(&s, &labels, &sub, &config).unwrap();
        let (l2, s2) = bootstrap_mean_tests(&s, &labels, &sub, &config).unwrap();
        assert_eq!(l1.draws, l2.draws);
        assert_eq!(s1.draws, s2.draws);
    }

    #[test]
    fn dist_test_needs_a_nondegenerate_reference_scale() {
        // All curves identical: the pooled column variances vanish, so the
        // reference measure for the z draws cannot be estimated.
        let (s, labels, sub) = identical_groups_fixture();
        assert!(matches!(
            bootstrap_dist_test(&s, &labels, &sub, &small_config(25, 9)),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn within_group_constant_curves_give_zero_dist_draws() {
        // Every resample of a group of identical curves reproduces the
        // observed surface exactly, so all replicate statistics vanish
        // while the observed statistic sees the group difference.
        use crate::sample_model::{restrict_domain, Grid};
        let grid = Grid::equispaced(3);
        let mut values = Vec::new();
        for curve in [[0.0, 1.0, 2.0]; 2].iter().chain([[1.0, 2.0, 3.0]; 2].iter()) {
            values.extend_from_slice(curve);
        }
        let s = FunctionalSample::new(grid, values, vec![1u8; 12], 4).unwrap();
        let labels =
            GroupLabels::external(vec![Group::A, Group::A, Group::B, Group::B]).unwrap();
        let sub = restrict_domain(&s, &labels, 0.1).unwrap();
        let r = bootstrap_dist_test(&s, &labels, &sub, &small_config(25, 9)).unwrap();
        assert!(r.statistic > 0.0);
        assert!(r.draws.iter().all(|&x| x == 0.0));
        assert_abs_diff_eq!(r.p_value, 1.0 / 26.0, epsilon = 1e-15);
    }

    #[test]
    fn single_replicate_band_is_finite() {
        let (s, labels, sub) = four_curve_fixture();
        let band = bootstrap_band(&s, &labels, &sub, 0.5, &small_config(1, 2)).unwrap();
        assert!(band.half_width.is_finite());
        assert!(band.half_width >= 0.0);
        assert_eq!(band.center.len(), sub.len());
        assert_eq!(band.source, BandSource::Bootstrap);
    }

    #[test]
    fn bootstrap_band_is_dual_to_bootstrap_sup_test() {
        let (s, labels, sub) = four_curve_fixture();
        let config = small_config(99, 21);
        let (_, sup) = bootstrap_mean_tests(&s, &labels, &sub, &config).unwrap();
        let band = bootstrap_band(&s, &labels, &sub, 0.95, &config).unwrap();
        assert_eq!(sup.p_value <= 0.05, !band.contains_zero());
    }

    #[test]
    fn pvalues_stay_in_the_monte_carlo_range() {
        let (s, labels, sub) = four_curve_fixture();
        let config = small_config(60, 13);
        let results = bootstrap_results(
            &s,
            &labels,
            &sub,
            &[Method::L2, Method::Sup, Method::Cvm],
            &config,
        )
        .unwrap();
        assert_eq!(results.len(), 3);
        for r in &results {
            assert!(r.p_value >= 1.0 / 61.0 && r.p_value <= 1.0);
            assert_eq!(r.calibration, Calibration::Bootstrap);
            assert_eq!(r.draws.len(), 60);
        }
    }
}
