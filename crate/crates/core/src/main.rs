//! Command-line driver: test, band, simulate, dump-estimates.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fdmcar::bootstrap::bootstrap_band;
use fdmcar::error::Error;
use fdmcar::estimators::{covariance_kernel_hat, group_mean};
use fdmcar::mcar_tests::{
    confidence_band_seeded, run_test, Calibration, ConfidenceBand, Method, TestConfig,
    TestRun, DEFAULT_BSTAR, DEFAULT_M_Z,
};
use fdmcar::partition::{
    labels_from_lines, partition_by_measure, partition_complete, GroupLabels,
};
use fdmcar::plot::{band_svg, power_svg};
use fdmcar::sample_model::{
    load_csv, restrict_domain, FunctionalSample, SubdomainIndex, DEFAULT_COVERAGE_FRACTION,
    DEFAULT_MISSING_TOKEN,
};
use fdmcar::simulation::{
    run_power_experiment, run_rejection_experiment, Mechanism, PowerPoint, RejectionRate,
    ScenarioConfig, DEFAULT_EXPERIMENT_BSTAR, DEFAULT_P,
};
use fdmcar::spectral::{DEFAULT_FVE, DEFAULT_Q_MAX};
use fdmcar::Group;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "fdmcar", version, about = "MCAR tests for partially observed functional data")]
struct Cli {
    /// Worker threads for parallel internals (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Master seed; falls back to the FDMCAR_SEED environment variable,
    /// then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run MCAR tests on a CSV sample and emit a JSON result.
    Test(TestArgs),
    /// Simultaneous confidence band for the group mean difference.
    Band(BandArgs),
    /// Monte Carlo experiments: type-I error tables and power curves.
    Simulate(SimulateArgs),
    /// Write the estimated group means and covariance kernel as CSV.
    DumpEstimates(DumpArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    L2,
    Sup,
    Cvm,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::L2 => vec![Method::L2],
            MethodArg::Sup => vec![Method::Sup],
            MethodArg::Cvm => vec![Method::Cvm],
            MethodArg::All => vec![Method::L2, Method::Sup, Method::Cvm],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CalibrationArg {
    Asymptotic,
    Bootstrap,
}

impl From<CalibrationArg> for Calibration {
    fn from(c: CalibrationArg) -> Calibration {
        match c {
            CalibrationArg::Asymptotic => Calibration::Asymptotic,
            CalibrationArg::Bootstrap => Calibration::Bootstrap,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableCalibrations {
    Asymptotic,
    Bootstrap,
    Both,
}

#[derive(Args)]
struct InputArgs {
    /// CSV sample: one curve per row, optional grid header row, missing
    /// cells empty or equal to the missing token.
    #[arg(long)]
    input: PathBuf,

    /// Partition rule: `complete`, `measure:<delta>`, or `file:<path>`.
    #[arg(long, default_value = "complete")]
    partition: String,

    /// Marker for unobserved cells.
    #[arg(long, default_value = DEFAULT_MISSING_TOKEN)]
    missing_token: String,

    /// Per-group coverage fraction defining the testable subdomain.
    #[arg(long, default_value_t = DEFAULT_COVERAGE_FRACTION)]
    coverage: f64,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,

    #[arg(long, value_enum, default_value_t = CalibrationArg::Asymptotic)]
    calibration: CalibrationArg,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long, default_value_t = DEFAULT_BSTAR)]
    bstar: usize,

    #[arg(long, default_value_t = DEFAULT_FVE)]
    fve: f64,

    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    q_max: usize,

    /// Monte Carlo points for the distributional covariance.
    #[arg(long, default_value_t = fdmcar::estimators::DEFAULT_K_POINTS)]
    k_points: usize,

    /// z draws for the distributional statistic.
    #[arg(long, default_value_t = DEFAULT_M_Z)]
    m_z: usize,

    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write mean/kernel estimates as CSV into this directory.
    #[arg(long)]
    dump_estimates: Option<PathBuf>,
}

#[derive(Args)]
struct BandArgs {
    #[command(flatten)]
    input: InputArgs,

    #[arg(long, value_enum, default_value_t = CalibrationArg::Asymptotic)]
    calibration: CalibrationArg,

    /// Simultaneous coverage level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,

    #[arg(long, default_value_t = DEFAULT_BSTAR)]
    bstar: usize,

    #[arg(long, default_value_t = DEFAULT_FVE)]
    fve: f64,

    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    q_max: usize,

    /// Band CSV path; defaults to `<input stem>.band.csv`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write an SVG rendering; with no value, `<input stem>.band.svg`.
    #[arg(long, num_args = 0..=1)]
    plot: Option<Option<PathBuf>>,
}

#[derive(Args)]
struct SimulateArgs {
    /// 1 = MCAR interval masks, 2 = value censoring.
    #[arg(long)]
    case: u8,

    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Grid resolution.
    #[arg(long, default_value_t = DEFAULT_P)]
    p: usize,

    #[arg(long, default_value_t = 1000)]
    reps: usize,

    #[arg(long, default_value_t = DEFAULT_EXPERIMENT_BSTAR)]
    bstar: usize,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Censoring lower bound (case 2).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    a: f64,

    /// Censoring upper bound (case 2, single point).
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,

    /// Censoring upper-bound grid `start:end:step` (case 2 power curves).
    #[arg(long)]
    b_grid: Option<String>,

    /// Calibrations to include in a type-I error table.
    #[arg(long, value_enum, default_value_t = TableCalibrations::Both)]
    calibration: TableCalibrations,

    /// Output CSV path; defaults to `case<case>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write an SVG of the power curves; with no value, `<out stem>.svg`.
    #[arg(long, num_args = 0..=1)]
    plot: Option<Option<PathBuf>>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Directory for mean_a.csv, mean_b.csv, kernel.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunManifest {
    schema_version: u32,
    version: &'static str,
    command: Vec<String>,
    seed: u64,
    threads: Option<usize>,
    config: serde_json::Value,
    outputs: Vec<String>,
    timing_ms: u128,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::RaggedRow { .. } | Error::ParseCell { .. } => 1,
        _ => 2,
    }
}

fn fail(err: Error) -> ExitCode {
    let obj = json!({
        "schema_version": SCHEMA_VERSION,
        "error": err.to_string(),
    });
    eprintln!("{obj}");
    ExitCode::from(exit_code_for(&err))
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("FDMCAR_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn load_input(args: &InputArgs) -> Result<(FunctionalSample, GroupLabels), Error> {
    let sample = load_csv(&args.input, &args.missing_token)?;
    let labels = if args.partition == "complete" {
        partition_complete(&sample)?
    } else if let Some(delta) = args.partition.strip_prefix("measure:") {
        let delta: f64 = delta
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse measure threshold {delta:?}")))?;
        partition_by_measure(&sample, delta)?
    } else if let Some(path) = args.partition.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)?;
        labels_from_lines(&text)?
    } else {
        return Err(Error::Config(format!(
            "unknown partition rule {:?}; expected complete, measure:<delta>, or file:<path>",
            args.partition
        )));
    };
    if labels.len() != sample.n() {
        return Err(Error::Dimension(format!(
            "{} labels for {} curves",
            labels.len(),
            sample.n()
        )));
    }
    Ok((sample, labels))
}

fn kept_points(sample: &FunctionalSample, subdomain: &SubdomainIndex) -> Vec<f64> {
    subdomain
        .kept
        .iter()
        .map(|&j| sample.grid().points()[j])
        .collect()
}

fn subdomain_json(sample: &FunctionalSample, subdomain: &SubdomainIndex) -> serde_json::Value {
    let t = kept_points(sample, subdomain);
    json!({
        "kept_count": subdomain.kept.len(),
        "first_point": t.first(),
        "last_point": t.last(),
        "coverage_threshold": subdomain.coverage_fraction,
    })
}

fn write_manifest(
    primary_output: &Path,
    seed: u64,
    threads: Option<usize>,
    config: serde_json::Value,
    outputs: &[&Path],
    started: Instant,
) -> Result<(), Error> {
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        version: fdmcar::VERSION,
        command: std::env::args().collect(),
        seed,
        threads,
        config,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        timing_ms: started.elapsed().as_millis(),
    };
    let path = PathBuf::from(format!("{}.manifest.json", primary_output.display()));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(path, text)?;
    Ok(())
}

fn default_stem_path(input: &Path, suffix: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    input.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_test(args: &TestArgs, seed: u64, threads: Option<usize>) -> Result<(), Error> {
    let started = Instant::now();
    let (sample, labels) = load_input(&args.input)?;
    let config = TestConfig {
        calibration: args.calibration.into(),
        bstar: args.bstar,
        fve: args.fve,
        q_max: args.q_max,
        coverage_threshold: args.input.coverage,
        k_points: args.k_points,
        m_z: args.m_z,
        seed,
    };
    let run = run_test(&sample, &labels, &args.method.methods(), &config)?;
    if let Some(dir) = &args.dump_estimates {
        dump_estimates(&sample, &labels, &run.subdomain, dir)?;
    }
    let result = test_run_json(&sample, &run, args.alpha);
    let text = serde_json::to_string_pretty(&result).expect("result serializes");
    match &args.out {
        Some(out) => {
            std::fs::write(out, text)?;
            let config_json = json!({
                "command": "test",
                "input": args.input.input.display().to_string(),
                "partition": args.input.partition,
                "missing_token": args.input.missing_token,
                "coverage": args.input.coverage,
                "alpha": args.alpha,
                "bstar": args.bstar,
                "fve": args.fve,
                "q_max": args.q_max,
                "k_points": args.k_points,
                "m_z": args.m_z,
            });
            write_manifest(out, seed, threads, config_json, &[out], started)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn test_run_json(sample: &FunctionalSample, run: &TestRun, alpha: f64) -> serde_json::Value {
    let results: Vec<serde_json::Value> = run
        .results
        .iter()
        .map(|r| {
            json!({
                "method": r.method,
                "calibration": r.calibration,
                "statistic": r.statistic,
                "p_value": r.p_value,
                "q_used": r.q_used,
                "reject": r.p_value <= alpha,
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "n": sample.n(),
        "n_a": run.n_a,
        "n_b": run.n_b,
        "alpha": alpha,
        "subdomain": subdomain_json(sample, &run.subdomain),
        "results": results,
    })
}

fn dump_estimates(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    subdomain: &SubdomainIndex,
    dir: &Path,
) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let t = kept_points(sample, subdomain);
    for group in [Group::A, Group::B] {
        let est = group_mean(sample, labels, subdomain, group)?;
        let mut text = String::from("t,mu,p_hat\n");
        for (k, point) in t.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", point, est.mu[k], est.p_hat[k]));
        }
        let name = match group {
            Group::A => "mean_a.csv",
            Group::B => "mean_b.csv",
        };
        std::fs::write(dir.join(name), text)?;
    }
    let kernel = covariance_kernel_hat(sample, labels, subdomain)?;
    let mut text = String::new();
    for row in 0..kernel.dim {
        let cells: Vec<String> = (0..kernel.dim)
            .map(|col| kernel.k[row * kernel.dim + col].to_string())
            .collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(dir.join("kernel.csv"), text)?;
    Ok(())
}

fn cmd_band(args: &BandArgs, seed: u64, threads: Option<usize>) -> Result<(), Error> {
    let started = Instant::now();
    let (sample, labels) = load_input(&args.input)?;
    let subdomain = restrict_domain(&sample, &labels, args.input.coverage)?;
    let band: ConfidenceBand = match args.calibration {
        CalibrationArg::Asymptotic => confidence_band_seeded(
            &sample,
            &labels,
            &subdomain,
            args.level,
            args.bstar,
            args.fve,
            args.q_max,
            seed,
        )?,
        CalibrationArg::Bootstrap => {
            let config = TestConfig {
                calibration: Calibration::Bootstrap,
                bstar: args.bstar,
                fve: args.fve,
                q_max: args.q_max,
                coverage_threshold: args.input.coverage,
                seed,
                ..TestConfig::default()
            };
            bootstrap_band(&sample, &labels, &subdomain, args.level, &config)?
        }
    };

    let t = kept_points(&sample, &subdomain);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_stem_path(&args.input.input, ".band.csv"));
    let mut text = String::from("t,center,lower,upper\n");
    for (tv, c) in t.iter().zip(&band.center) {
        text.push_str(&format!(
            "{},{},{},{}\n",
            tv,
            c,
            c - band.half_width,
            c + band.half_width
        ));
    }
    std::fs::write(&out, text)?;

    let mut outputs: Vec<PathBuf> = vec![out.clone()];
    if let Some(plot) = &args.plot {
        let plot_path = match plot {
            Some(path) => path.clone(),
            None => default_stem_path(&args.input.input, ".band.svg"),
        };
        std::fs::write(&plot_path, band_svg(&t, &band)?)?;
        outputs.push(plot_path);
    }
    let config_json = json!({
        "command": "band",
        "input": args.input.input.display().to_string(),
        "partition": args.input.partition,
        "coverage": args.input.coverage,
        "level": args.level,
        "bstar": args.bstar,
        "fve": args.fve,
        "q_max": args.q_max,
        "half_width": band.half_width,
        "contains_zero": band.contains_zero(),
        "source": band.source,
    });
    let refs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    write_manifest(&out, seed, threads, config_json, &refs, started)?;
    Ok(())
}

fn parse_b_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "b grid must be start:end:step, got {text:?}"
        )));
    }
    let parse = |s: &str| -> Result<f64, Error> {
        s.parse()
            .map_err(|_| Error::Config(format!("cannot parse grid number {s:?}")))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    // Negated comparison so a NaN step is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(step > 0.0) || end < start {
        return Err(Error::Config(format!(
            "b grid must have positive step and end >= start, got {text:?}"
        )));
    }
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let b = start + k as f64 * step;
        if b > end + 1e-9 {
            break;
        }
        grid.push(b);
        k += 1;
    }
    Ok(grid)
}

fn cmd_simulate(args: &SimulateArgs, seed: u64, threads: Option<usize>) -> Result<(), Error> {
    let started = Instant::now();
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("case{}.csv", args.case)));
    let mechanism = match args.case {
        1 => Mechanism::McarInterval,
        2 => Mechanism::Censoring {
            a: args.a,
            b: args.b.unwrap_or(1.0),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown simulation case {other}; expected 1 or 2"
            )))
        }
    };
    let config = ScenarioConfig {
        n: args.n,
        p: args.p,
        mechanism,
        reps: args.reps,
        alpha: args.alpha,
        bstar: args.bstar,
        seed,
    };

    let mut outputs: Vec<PathBuf> = vec![out.clone()];
    let summary: serde_json::Value;
    if let Some(grid_text) = &args.b_grid {
        if args.case != 2 {
            return Err(Error::Config("--b-grid requires --case 2".into()));
        }
        let grid = parse_b_grid(grid_text)?;
        let points = run_power_experiment(&config, &grid)?;
        std::fs::write(&out, power_csv(&points))?;
        if let Some(plot) = &args.plot {
            let plot_path = match plot {
                Some(path) => path.clone(),
                None => out.with_extension("svg"),
            };
            std::fs::write(&plot_path, power_svg(&points, args.alpha)?)?;
            outputs.push(plot_path);
        }
        summary = json!({ "kind": "power", "b_grid": grid });
    } else {
        let calibrations: &[Calibration] = match args.calibration {
            TableCalibrations::Asymptotic => &[Calibration::Asymptotic],
            TableCalibrations::Bootstrap => &[Calibration::Bootstrap],
            TableCalibrations::Both => &[Calibration::Asymptotic, Calibration::Bootstrap],
        };
        let rates = run_rejection_experiment(&config, calibrations)?;
        std::fs::write(&out, rates_csv(&rates))?;
        summary = json!({ "kind": "rejection-table" });
    }
    let config_json = json!({
        "command": "simulate",
        "case": args.case,
        "n": args.n,
        "p": args.p,
        "reps": args.reps,
        "bstar": args.bstar,
        "alpha": args.alpha,
        "a": args.a,
        "b": args.b,
        "summary": summary,
    });
    let refs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    write_manifest(&out, seed, threads, config_json, &refs, started)?;
    Ok(())
}

fn rates_csv(rates: &[RejectionRate]) -> String {
    let mut text = String::from("method,calibration,rejection_rate\n");
    for cell in rates {
        let method = match cell.method {
            Method::L2 => "l2",
            Method::Sup => "sup",
            Method::Cvm => "cvm",
        };
        let calibration = match cell.calibration {
            Calibration::Asymptotic => "asymptotic",
            Calibration::Bootstrap => "bootstrap",
        };
        text.push_str(&format!("{method},{calibration},{}\n", cell.rate));
    }
    text
}

fn power_csv(points: &[PowerPoint]) -> String {
    let mut text = String::from("b,l2,sup,cvm\n");
    for p in points {
        text.push_str(&format!(
            "{},{},{},{}\n",
            p.b, p.rejection[0], p.rejection[1], p.rejection[2]
        ));
    }
    text
}

fn cmd_dump(args: &DumpArgs, _seed: u64) -> Result<(), Error> {
    let (sample, labels) = load_input(&args.input)?;
    let subdomain = restrict_domain(&sample, &labels, args.input.coverage)?;
    dump_estimates(&sample, &labels, &subdomain, &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            return fail(Error::Config(format!("cannot configure thread pool: {e}")));
        }
    }
    let seed = resolve_seed(cli.seed);
    let result = match &cli.command {
        Command::Test(args) => cmd_test(args, seed, cli.threads),
        Command::Band(args) => cmd_band(args, seed, cli.threads),
        Command::Simulate(args) => cmd_simulate(args, seed, cli.threads),
        Command::DumpEstimates(args) => cmd_dump(args, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
