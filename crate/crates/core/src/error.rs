//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("ragged row at row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("cannot parse cell at row {row}, column {col}: {value:?}")]
    ParseCell {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("curve index {index} out of range for sample of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error(
        "no testable subdomain: the maximal attained per-group minimum observed \
         count is {max_min_count}, required > {required}"
    )]
    NoTestableSubdomain { max_min_count: usize, required: f64 },

    #[error("partition assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("degenerate column {col}: empirical observation probability is zero")]
    DegenerateColumn { col: usize },

    #[error("degenerate scale: pooled variance is not positive (tau^2 = {tau2})")]
    DegenerateVariance { tau2: f64 },

    #[error("column {col} has {count} pooled observations, need at least 2 for a variance")]
    VarianceUndefined { col: usize, count: usize },

    #[error("eigendecomposition expects a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("eigendecomposition did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("degenerate spectrum: all eigenvalues are non-positive")]
    DegenerateSpectrum,

    #[error("p-value requires at least one calibration draw")]
    EmptyDraws,

    #[error(
        "bootstrap replicate {replicate} stayed degenerate after {attempts} redraws \
         (kept column with no observations in one group)"
    )]
    DegenerateReplicate { replicate: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}
