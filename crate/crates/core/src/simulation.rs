//! Synthetic data generators and Monte Carlo experiment drivers.
//!
//! Curves are standard Brownian paths on an equispaced grid. Two
//! observation mechanisms are provided: an MCAR one, where half the
//! curves are fully observed and the rest are observed on a random
//! interval independent of the path, and a censoring one, where a point
//! is observed exactly when the path lies inside an open interval (a, b),
//! so missingness depends on the values and MCAR fails.
//!
//! The experiment drivers are pure map-reduce over replicate indices:
//! each replicate derives its own seed, so tables are bit-exact
//! reproductions of (config, seed) regardless of thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Error;
use crate::mcar_tests::{
    confidence_band_seeded, run_test, Calibration, Method, TestConfig,
};
use crate::partition::{partition_complete, GroupLabels};
use crate::rng::{derive_seed, labels as stream, substream};
use crate::sample_model::{restrict_domain, FunctionalSample, Grid};

/// Default grid resolution for simulated paths.
pub const DEFAULT_P: usize = 100;
/// Default calibration draws per replicate inside experiments; smaller
/// than the single-test default because it is paid once per replicate.
pub const DEFAULT_EXPERIMENT_BSTAR: usize = 2_000;

/// How observations are removed from the simulated paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    /// Half the curves complete, the rest observed on a random interval
    /// independent of the path (MCAR holds).
    McarInterval,
    /// A point is observed iff the path lies strictly inside (a, b)
    /// (MCAR fails).
    Censoring { a: f64, b: f64 },
}

/// One simulation experiment: scenario, size, and testing knobs.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    pub mechanism: Mechanism,
    pub reps: usize,
    pub alpha: f64,
    pub bstar: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn case1(n: usize, reps: usize, seed: u64) -> Self {
        ScenarioConfig {
            n,
            p: DEFAULT_P,
            mechanism: Mechanism::McarInterval,
            reps,
            alpha: 0.05,
            bstar: DEFAULT_EXPERIMENT_BSTAR,
            seed,
        }
    }

    pub fn case2(n: usize, reps: usize, a: f64, b: f64, seed: u64) -> Self {
        ScenarioConfig {
            n,
            p: DEFAULT_P,
            mechanism: Mechanism::Censoring { a, b },
            reps,
            alpha: 0.05,
            bstar: DEFAULT_EXPERIMENT_BSTAR,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n < 2 || self.p < 2 {
            return Err(Error::Config(format!(
                "need n >= 2 and p >= 2, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.reps < 1 {
            return Err(Error::Config("need at least one replication".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if self.bstar < 1 {
            return Err(Error::Config("need at least one calibration draw".into()));
        }
        if let Mechanism::Censoring { a, b } = self.mechanism {
            if !(a < 0.0 && 0.0 < b) {
                return Err(Error::Config(format!(
                    "censoring interval must satisfy a < 0 < b, got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }
}

/// n standard Brownian paths on the grid t_j = j/p, fully observed:
/// cumulative sums of independent N(0, 1/p) increments.
pub fn brownian_sample<R: Rng>(n: usize, p: usize, rng: &mut R) -> FunctionalSample {
    let step = 1.0 / (p as f64).sqrt();
    let mut values = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut x = 0.0;
        for _ in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            x += step * z;
            values.push(x);
        }
    }
    FunctionalSample::new(Grid::equispaced(p), values, vec![1u8; n * p], n)
        .expect("finite Gaussian paths on a valid grid")
}

/// MCAR observation masks: with probability 1/2 the curve is complete,
/// otherwise it is observed exactly on [L, U) with L, U the order
/// statistics of two independent Uniform[0,1] draws.
pub fn mcar_interval_mask<R: Rng>(n: usize, p: usize, rng: &mut R) -> Vec<u8> {
    let mut mask = vec![0u8; n * p];
    for i in 0..n {
        let row = &mut mask[i * p..(i + 1) * p];
        if rng.gen_bool(0.5) {
            row.fill(1);
            continue;
        }
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let (l, u) = (u1.min(u2), u1.max(u2));
        for (j, cell) in row.iter_mut().enumerate() {
            let t = (j + 1) as f64 / p as f64;
            if l <= t && t < u {
                *cell = 1;
            }
        }
    }
    mask
}

/// Censoring masks: observed exactly where the path lies strictly inside
/// the open interval (a, b).
pub fn censoring_mask(paths: &FunctionalSample, a: f64, b: f64) -> Result<Vec<u8>, Error> {
    if !(a < 0.0 && 0.0 < b) {
        return Err(Error::Config(format!(
            "censoring interval must satisfy a < 0 < b, got ({a}, {b})"
        )));
    }
    let (n, p) = (paths.n(), paths.p());
    let mut mask = vec![0u8; n * p];
    for i in 0..n {
        for j in 0..p {
            if !paths.observed(i, j) {
                continue;
            }
            let x = paths.value(i, j);
            if a < x && x < b {
                mask[i * p + j] = 1;
            }
        }
    }
    Ok(mask)
}

/// One simulated dataset under the configured mechanism, with labels from
/// the complete/incomplete partition. `rep_seed` should come from
/// [`derive_seed`] so that replicates are independent.
pub fn generate_scenario(
    n: usize,
    p: usize,
    mechanism: Mechanism,
    rep_seed: u64,
) -> Result<(FunctionalSample, GroupLabels), Error> {
    let mut path_rng = substream(rep_seed, stream::SIM_PATHS, 0);
    let paths = brownian_sample(n, p, &mut path_rng);
    let mask = match mechanism {
        Mechanism::McarInterval => {
            let mut mask_rng = substream(rep_seed, stream::SIM_MASKS, 0);
            mcar_interval_mask(n, p, &mut mask_rng)
        }
        Mechanism::Censoring { a, b } => censoring_mask(&paths, a, b)?,
    };
    let sample = FunctionalSample::new(paths.grid().clone(), paths.values().to_vec(), mask, n)?;
    let labels = partition_complete(&sample)?;
    Ok((sample, labels))
}

/// One cell of a rejection-rate table.
#[derive(Debug, Clone, Copy)]
pub struct RejectionRate {
    pub method: Method,
    pub calibration: Calibration,
    pub rate: f64,
}

/// Empirical rejection rates of all six method × calibration cells under
/// the configured mechanism.
pub fn run_type1_experiment(config: &ScenarioConfig) -> Result<Vec<RejectionRate>, Error> {
    run_rejection_experiment(config, &[Calibration::Asymptotic, Calibration::Bootstrap])
}

/// Rejection rates restricted to the given calibrations (the asymptotic
/// half of the table is much cheaper than the bootstrap half).
pub fn run_rejection_experiment(
    config: &ScenarioConfig,
    calibrations: &[Calibration],
) -> Result<Vec<RejectionRate>, Error> {
    config.validate()?;
    let methods = [Method::L2, Method::Sup, Method::Cvm];
    let cells = calibrations.len() * methods.len();
    let counts: Vec<Vec<bool>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<bool>, Error> {
            let rep_seed = derive_seed(config.seed, stream::SIM_REPLICATE, rep as u64);
            let (sample, labels) =
                generate_scenario(config.n, config.p, config.mechanism, rep_seed)?;
            let mut rejected = Vec::with_capacity(cells);
            for &calibration in calibrations {
                let test_config = TestConfig {
                    calibration,
                    bstar: config.bstar,
                    seed: rep_seed,
                    ..TestConfig::default()
                };
                let run = run_test(&sample, &labels, &methods, &test_config)?;
                for r in &run.results {
                    rejected.push(r.p_value <= config.alpha);
                }
            }
            Ok(rejected)
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let mut rates = Vec::with_capacity(cells);
    let mut cell = 0;
    for &calibration in calibrations {
        for &method in &methods {
            let hits = counts.iter().filter(|r| r[cell]).count();
            rates.push(RejectionRate {
                method,
                calibration,
                rate: hits as f64 / config.reps as f64,
            });
            cell += 1;
        }
    }
    Ok(rates)
}

/// One point of a power curve: rejection rate per method at censoring
/// upper bound `b`.
#[derive(Debug, Clone, Copy)]
pub struct PowerPoint {
    pub b: f64,
    /// Asymptotic rejection rates in method order L², sup, distributional.
    pub rejection: [f64; 3],
}

/// Asymptotic power curves over a grid of censoring upper bounds, with
/// the lower bound taken from the configured mechanism. Replicate seeds
/// are shared across b values (common random numbers), so the curves are
/// directly comparable point to point.
pub fn run_power_experiment(
    config: &ScenarioConfig,
    b_grid: &[f64],
) -> Result<Vec<PowerPoint>, Error> {
    config.validate()?;
    let a = match config.mechanism {
        Mechanism::Censoring { a, .. } => a,
        Mechanism::McarInterval => {
            return Err(Error::Config(
                "power curves require the censoring mechanism".into(),
            ))
        }
    };
    if b_grid.is_empty() {
        return Err(Error::Config("empty b grid".into()));
    }
    let methods = [Method::L2, Method::Sup, Method::Cvm];
    let mut out = Vec::with_capacity(b_grid.len());
    for &b in b_grid {
        // Negated comparison so a NaN bound is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(b > 0.0) {
            return Err(Error::Config(format!(
                "censoring upper bound must be positive, got {b}"
            )));
        }
        let rejected: Vec<[bool; 3]> = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<[bool; 3], Error> {
                let rep_seed = derive_seed(config.seed, stream::SIM_REPLICATE, rep as u64);
                let (sample, labels) = generate_scenario(
                    config.n,
                    config.p,
                    Mechanism::Censoring { a, b },
                    rep_seed,
                )?;
                let test_config = TestConfig {
                    calibration: Calibration::Asymptotic,
                    bstar: config.bstar,
                    seed: rep_seed,
                    ..TestConfig::default()
                };
                let run = run_test(&sample, &labels, &methods, &test_config)?;
                let mut cell = [false; 3];
                for (k, r) in run.results.iter().enumerate() {
                    cell[k] = r.p_value <= config.alpha;
                }
                Ok(cell)
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let mut rejection = [0.0; 3];
        for k in 0..3 {
            rejection[k] =
                rejected.iter().filter(|c| c[k]).count() as f64 / config.reps as f64;
        }
        out.push(PowerPoint { b, rejection });
    }
    Ok(out)
}

/// Outcome of a band-coverage experiment.
#[derive(Debug, Clone, Copy)]
pub struct CoverageResult {
    /// Fraction of replications whose band contains the zero function.
    pub coverage: f64,
    /// Whether band-contains-zero agreed with sup-test non-rejection in
    /// every replication.
    pub dual_agreement: bool,
}

/// Simultaneous-band coverage of the zero function under the configured
/// mechanism, with the replicate-by-replicate duality check against the
/// asymptotic sup test at matching level.
pub fn run_band_coverage_experiment(
    config: &ScenarioConfig,
    level: f64,
) -> Result<CoverageResult, Error> {
    config.validate()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "band level must lie in (0,1), got {level}"
        )));
    }
    let alpha = 1.0 - level;
    let outcomes: Vec<(bool, bool)> = (0..config.reps)
        .into_par_iter()
        .map(|rep| -> Result<(bool, bool), Error> {
            let rep_seed = derive_seed(config.seed, stream::SIM_REPLICATE, rep as u64);
            let (sample, labels) =
                generate_scenario(config.n, config.p, config.mechanism, rep_seed)?;
            let test_config = TestConfig {
                calibration: Calibration::Asymptotic,
                bstar: config.bstar,
                seed: rep_seed,
                ..TestConfig::default()
            };
            let run = run_test(&sample, &labels, &[Method::Sup], &test_config)?;
            let subdomain = restrict_domain(&sample, &labels, test_config.coverage_threshold)?;
            let band = confidence_band_seeded(
                &sample,
                &labels,
                &subdomain,
                level,
                config.bstar,
                test_config.fve,
                test_config.q_max,
                rep_seed,
            )?;
            let contains = band.contains_zero();
            let non_reject = run.results[0].p_value > alpha;
            Ok((contains, contains == non_reject))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let covered = outcomes.iter().filter(|o| o.0).count();
    Ok(CoverageResult {
        coverage: covered as f64 / config.reps as f64,
        dual_agreement: outcomes.iter().all(|o| o.1),
    })
}
