//! Dense symmetric eigendecomposition and quadrature scaling.
//!
//! A cyclic Jacobi solver covers the matrix sizes arising here (a few
//! hundred at most). Matrix eigenpairs are rescaled by the grid spacing to
//! eigenpairs of the discretized integral operator, and a
//! fraction-of-variance-explained rule truncates the spectrum.

use crate::error::Error;

/// Default fraction of variance explained for spectrum truncation. The
/// distributional covariance spectrum decays slowly, and discarding its
/// tail deflates the calibration draws, so the default keeps nearly the
/// whole positive spectrum.
pub const DEFAULT_FVE: f64 = 0.999;
/// Default cap on the number of retained eigencomponents; matches the
/// default Monte Carlo point count of the distributional covariance so
/// the cap never binds there.
pub const DEFAULT_Q_MAX: usize = 200;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a discretized covariance operator.
///
/// `eigenvalues` are on the operator scale (matrix eigenvalue times the
/// quadrature weight), descending. `eigenvectors` is the column-orthonormal
/// matrix of the underlying symmetric matrix, stored row-major with column
/// `j` holding the j-th eigenvector; dividing a column by the square root
/// of the quadrature weight evaluates the eigenfunction on the grid.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<f64>,
    pub dim: usize,
    pub quadrature_weight: f64,
}

impl EigenSystem {
    /// Eigenfunction value phi_j at grid row `row`, normalized so that the
    /// discrete L2 norm sum(phi^2) * weight equals 1.
    #[inline]
    pub fn eigenfunction(&self, j: usize, row: usize) -> f64 {
        self.eigenvectors[row * self.dim + j] / self.quadrature_weight.sqrt()
    }
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_frobenius(w: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            let x = w[p * n + q];
            s += 2.0 * x * x;
        }
    }
    s.sqrt()
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized by averaging before iteration. Returns
/// eigenvalues in descending order and the matching eigenvectors stored
/// row-major with column j = eigenvector j. Each eigenvector is oriented
/// so that its largest-magnitude component is positive.
pub fn sym_eig(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), Error> {
    jacobi(a, n, true).map(|(vals, vecs)| (vals, vecs.expect("vectors requested")))
}

/// Eigenvalues only; skips eigenvector accumulation.
pub fn sym_eig_values(a: &[f64], n: usize) -> Result<Vec<f64>, Error> {
    jacobi(a, n, false).map(|(vals, _)| vals)
}

fn jacobi(a: &[f64], n: usize, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>), Error> {
    if a.len() != n * n {
        let rows = a.len().checked_div(n).unwrap_or(0);
        return Err(Error::NonSquare { rows, cols: n });
    }
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }

    let mut w = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            w[p * n + q] = 0.5 * (a[p * n + q] + a[q * n + p]);
        }
    }
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for k in 0..n {
            id[k * n + k] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    let norm = frobenius(&w);
    let tol = 1e-12 * norm;
    let mut converged = norm == 0.0 || n == 1;
    if !converged {
        for _sweep in 0..MAX_SWEEPS {
            if off_diagonal_frobenius(&w, n) <= tol {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = w[p * n + q];
                    if apq.abs() <= 0.1 * tol / (n as f64) {
                        continue;
                    }
                    let app = w[p * n + p];
                    let aqq = w[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    for k in 0..n {
                        if k == p || k == q {
                            continue;
                        }
                        let akp = w[p * n + k];
                        let akq = w[q * n + k];
                        w[p * n + k] = c * akp - s * akq;
                        w[q * n + k] = s * akp + c * akq;
                        w[k * n + p] = w[p * n + k];
                        w[k * n + q] = w[q * n + k];
                    }
                    w[p * n + p] = app - t * apq;
                    w[q * n + q] = aqq + t * apq;
                    w[p * n + q] = 0.0;
                    w[q * n + p] = 0.0;

                    if let Some(v) = v.as_mut() {
                        for k in 0..n {
                            let vkp = v[k * n + p];
                            let vkq = v[k * n + q];
                            v[k * n + p] = c * vkp - s * vkq;
                            v[k * n + q] = s * vkp + c * vkq;
                        }
                    }
                }
            }
        }
        if !converged && off_diagonal_frobenius(&w, n) > tol {
            return Err(Error::NonConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|k| w[k * n + k]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| diag[k]).collect();

    let eigenvectors = v.map(|v| {
        let mut out = vec![0.0; n * n];
        for (col, &src) in order.iter().enumerate() {
            // Sign convention: largest-magnitude component positive.
            let mut best = 0.0f64;
            for k in 0..n {
                let x = v[k * n + src];
                if x.abs() > best.abs() {
                    best = x;
                }
            }
            let sign = if best < 0.0 { -1.0 } else { 1.0 };
            for k in 0..n {
                out[k * n + col] = sign * v[k * n + src];
            }
        }
        out
    });

    Ok((eigenvalues, eigenvectors))
}

/// Rescale matrix eigenpairs to operator eigenpairs: lambda_j = weight *
/// xi_j, with eigenfunctions normalized through [`EigenSystem::eigenfunction`].
pub fn operator_scale(
    matrix_eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
    dim: usize,
    quadrature_weight: f64,
) -> EigenSystem {
    assert!(quadrature_weight > 0.0, "quadrature weight must be positive");
    EigenSystem {
        eigenvalues: matrix_eigenvalues
            .into_iter()
            .map(|xi| xi * quadrature_weight)
            .collect(),
        eigenvectors,
        dim,
        quadrature_weight,
    }
}

/// Smallest q whose leading eigenvalues explain at least `fve` of the
/// total (negative tail clipped to zero), capped at `q_max`.
pub fn truncate_fve(eigenvalues: &[f64], fve: f64, q_max: usize) -> Result<usize, Error> {
    assert!(fve > 0.0 && fve < 1.0, "fve must lie in (0,1)");
    assert!(q_max >= 1, "q_max must be at least 1");
    let total: f64 = eigenvalues.iter().map(|&x| x.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let mut cum = 0.0;
    for (idx, &x) in eigenvalues.iter().enumerate() {
        cum += x.max(0.0);
        if cum / total >= fve {
            return Ok((idx + 1).min(q_max));
        }
    }
    Ok(eigenvalues.len().min(q_max))
}
