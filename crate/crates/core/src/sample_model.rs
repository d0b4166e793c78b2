//! Partially observed functional samples on a common grid.
//!
//! A sample holds an n×p value matrix and a binary observation mask over a
//! grid of p points in [0,1]. The mask is authoritative: wherever it is 0
//! the value entry is NaN and is never read. CSV ingestion, the grid
//! approximation of the observation measure, and the testable-subdomain
//! restriction live here.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::Error;
use crate::partition::{Group, GroupLabels};

/// Default textual marker for unobserved cells.
pub const DEFAULT_MISSING_TOKEN: &str = "NA";

/// Default per-group coverage fraction for the testable subdomain.
pub const DEFAULT_COVERAGE_FRACTION: f64 = 0.1;

/// Ordered grid of evaluation points in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    spacing: f64,
}

impl Grid {
    /// Equispaced grid t_j = j/p for j = 1..p. The point t = 0 is excluded
    /// so that processes pinned at the origin (Brownian paths) do not
    /// contribute a zero-variance column.
    pub fn equispaced(p: usize) -> Self {
        let pf = p as f64;
        Grid {
            points: (1..=p).map(|j| j as f64 / pf).collect(),
            spacing: 1.0 / pf,
        }
    }

    /// Grid from explicit coordinates; spacing is the mean inter-point
    /// distance.
    pub fn from_points(points: Vec<f64>) -> Result<Self, Error> {
        if points.len() < 2 {
            return Err(Error::Grid(format!(
                "need at least 2 grid points, got {}",
                points.len()
            )));
        }
        for w in points.windows(2) {
            // Negated comparison so NaN grid points are rejected too.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(w[1] > w[0]) {
                return Err(Error::Grid(format!(
                    "grid points must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if points.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Grid("grid points must lie in [0,1]".into()));
        }
        let spacing = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        Ok(Grid { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// n curves measured on a common grid with a binary observation mask.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Grid,
    /// Row-major n×p, NaN wherever the mask is 0.
    values: Vec<f64>,
    /// Row-major n×p over {0,1}.
    mask: Vec<u8>,
    n: usize,
    p: usize,
}

impl FunctionalSample {
    /// Build from flat row-major matrices. Entries under mask = 0 are
    /// overwritten with NaN; entries under mask = 1 must be finite.
    pub fn new(grid: Grid, mut values: Vec<f64>, mask: Vec<u8>, n: usize) -> Result<Self, Error> {
        let p = grid.len();
        if n < 2 || p < 2 {
            return Err(Error::Dimension(format!(
                "need n >= 2 curves and p >= 2 grid points, got n = {n}, p = {p}"
            )));
        }
        if values.len() != n * p || mask.len() != n * p {
            return Err(Error::Dimension(format!(
                "expected {}x{} matrices, got values of length {} and mask of length {}",
                n,
                p,
                values.len(),
                mask.len()
            )));
        }
        for (idx, (&m, v)) in mask.iter().zip(values.iter_mut()).enumerate() {
            match m {
                1 if !v.is_finite() => {
                    return Err(Error::Dimension(format!(
                        "non-finite value at row {}, column {} marked observed",
                        idx / p,
                        idx % p
                    )))
                }
                0 => *v = f64::NAN,
                1 => {}
                other => {
                    return Err(Error::Dimension(format!(
                        "mask entries must be 0 or 1, got {other}"
                    )))
                }
            }
        }
        Ok(FunctionalSample {
            grid,
            values,
            mask,
            n,
            p,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    #[inline]
    pub fn observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.p + j] == 1
    }

    #[inline]
    pub fn value_row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn mask_row(&self, i: usize) -> &[u8] {
        &self.mask[i * self.p..(i + 1) * self.p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[u8] {
        &self.mask
    }
}

/// Columns on which both groups retain enough observations for the
/// available-case estimators to be well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainIndex {
    /// Ordered column indices into the grid.
    pub kept: Vec<usize>,
    /// The per-group coverage threshold that produced this subdomain.
    pub coverage_fraction: f64,
}

impl SubdomainIndex {
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Lebesgue measure of the subdomain under the grid quadrature.
    pub fn domain_length(&self, grid: &Grid) -> f64 {
        self.kept.len() as f64 * grid.spacing()
    }
}

/// Fraction of the grid on which curve `i` is observed; the grid
/// approximation of the Lebesgue measure of its observation set.
pub fn observed_measure(sample: &FunctionalSample, i: usize) -> Result<f64, Error> {
    if i >= sample.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            n: sample.n(),
        });
    }
    let count = sample.mask_row(i).iter().map(|&m| m as usize).sum::<usize>();
    Ok(count as f64 / sample.p() as f64)
}

/// Keep every column at which both groups observe strictly more than
/// n·threshold curves.
pub fn restrict_domain(
    sample: &FunctionalSample,
    labels: &GroupLabels,
    threshold: f64,
) -> Result<SubdomainIndex, Error> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!(
            "coverage threshold must lie in (0,1), got {threshold}"
        )));
    }
    if labels.len() != sample.n() {
        return Err(Error::Dimension(format!(
            "labels of length {} do not match sample of size {}",
            labels.len(),
            sample.n()
        )));
    }
    let (n, p) = (sample.n(), sample.p());
    let mut count_a = vec![0usize; p];
    let mut count_b = vec![0usize; p];
    for i in 0..n {
        let counts = match labels.label(i) {
            Group::A => &mut count_a,
            Group::B => &mut count_b,
        };
        for (c, &m) in counts.iter_mut().zip(sample.mask_row(i)) {
            *c += m as usize;
        }
    }
    let required = n as f64 * threshold;
    let mut kept = Vec::new();
    let mut max_min_count = 0usize;
    for j in 0..p {
        let min_count = count_a[j].min(count_b[j]);
        max_min_count = max_min_count.max(min_count);
        if min_count as f64 > required {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoTestableSubdomain {
            max_min_count,
            required,
        });
    }
    Ok(SubdomainIndex {
        kept,
        coverage_fraction: threshold,
    })
}

/// Parse a sample from CSV text. One row per curve; an optional first row
/// of grid coordinates is recognized when all of its cells are numbers
/// that are strictly increasing and lie in [0,1]. Cells equal to
/// `missing_token` (or empty) are unobserved.
pub fn load_csv_reader<R: BufRead>(
    reader: R,
    missing_token: &str,
) -> Result<FunctionalSample, Error> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::Dimension("empty input".into()));
    }
    let p = rows[0].len();
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::RaggedRow {
                row: idx + 1,
                expected: p,
                found: row.len(),
            });
        }
    }

    let header_grid = parse_header_grid(&rows[0], missing_token);
    let (grid, data_rows) = match header_grid {
        Some(points) => (Grid::from_points(points)?, &rows[1..]),
        None => (Grid::equispaced(p), &rows[..]),
    };
    let header_offset = if rows.len() == data_rows.len() { 0 } else { 1 };

    let n = data_rows.len();
    if n < 2 || p < 2 {
        return Err(Error::Dimension(format!(
            "need n >= 2 curves and p >= 2 grid points, got n = {n}, p = {p}"
        )));
    }
    let mut values = vec![f64::NAN; n * p];
    let mut mask = vec![0u8; n * p];
    for (i, row) in data_rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.is_empty() || cell == missing_token {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::ParseCell {
                row: i + 1 + header_offset,
                col: j + 1,
                value: cell.clone(),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseCell {
                    row: i + 1 + header_offset,
                    col: j + 1,
                    value: cell.clone(),
                });
            }
            values[i * p + j] = v;
            mask[i * p + j] = 1;
        }
    }
    FunctionalSample::new(grid, values, mask, n)
}

fn parse_header_grid(row: &[String], missing_token: &str) -> Option<Vec<f64>> {
    let mut points = Vec::with_capacity(row.len());
    for cell in row {
        if cell.is_empty() || cell == missing_token {
            return None;
        }
        let v: f64 = cell.parse().ok()?;
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return None;
        }
        if let Some(&last) = points.last() {
            if v <= last {
                return None;
            }
        }
        points.push(v);
    }
    Some(points)
}

pub fn load_csv<P: AsRef<Path>>(path: P, missing_token: &str) -> Result<FunctionalSample, Error> {
    let file = File::open(path)?;
    load_csv_reader(BufReader::new(file), missing_token)
}

/// Serialize a sample as CSV with a grid header row. Numbers use the
/// shortest representation that round-trips the exact binary value.
pub fn write_csv_writer<W: Write>(
    sample: &FunctionalSample,
    mut w: W,
    missing_token: &str,
) -> Result<(), Error> {
    let header: Vec<String> = sample.grid().points().iter().map(|t| t.to_string()).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..sample.n() {
        let row: Vec<String> = (0..sample.p())
            .map(|j| {
                if sample.observed(i, j) {
                    sample.value(i, j).to_string()
                } else {
                    missing_token.to_string()
                }
            })
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_csv<P: AsRef<Path>>(
    sample: &FunctionalSample,
    path: P,
    missing_token: &str,
) -> Result<(), Error> {
    let file = File::create(path)?;
    write_csv_writer(sample, BufWriter::new(file), missing_token)
}
