//! One-sided Jacobi singular value decomposition.
//!
//! The sizes in this crate stay below a few hundred rows/columns, where
//! one-sided Jacobi is simple, backward stable, and gives high relative
//! accuracy even for small singular values. Rotations are applied in a fixed
//! cyclic order so the factorization is deterministic for a given input.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Thin SVD `A = U diag(sigma) Vt` with `sigma` sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// m x p, orthonormal columns.
    pub u: Matrix,
    /// p = min(m, n) non-negative singular values, descending.
    pub sigma: Vec<f64>,
    /// p x n, orthonormal rows.
    pub vt: Matrix,
}

impl SvdResult {
    /// Reconstructs `U diag(sigma) Vt`.
    pub fn reconstruct(&self) -> Matrix {
        let p = self.sigma.len();
        let mut scaled = self.u.clone();
        for i in 0..scaled.rows() {
            for j in 0..p {
                scaled[(i, j)] *= self.sigma[j];
            }
        }
        scaled.matmul(&self.vt)
    }
}

const MAX_SWEEPS: usize = 64;

/// Computes the thin SVD of a dense matrix.
///
/// Sign convention: the first entry of each column of `U` that is not
/// negligible relative to the column is made non-negative, so factor
/// directions are comparable across runs.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input must be finite".into()));
    }
    let mut out = if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.transpose());
        SvdResult {
            u: t.vt.transpose(),
            sigma: t.sigma,
            vt: t.u.transpose(),
        }
    };
    fix_signs(&mut out);
    Ok(out)
}

/// One-sided Jacobi for m >= n: rotate column pairs of a working copy until
/// mutually orthogonal, accumulating the rotations in V.
fn svd_tall(a: &Matrix) -> SvdResult {
    let (m, n) = (a.rows(), a.cols());
    debug_assert!(m >= n);
    let mut b = a.clone();
    let mut v = Matrix::identity(n);
    let tol = 1e-15;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = c * bp - s * bq;
                    b[(i, q)] = s * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| b[(i, j)] * b[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let mut u = Matrix::zeros(m, n);
    let mut vt = Matrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    let max_norm = norms.iter().cloned().fold(0.0f64, f64::max);
    let rank_tol = max_norm * (m.max(n) as f64) * f64::EPSILON;

    for (k, &j) in order.iter().enumerate() {
        sigma[k] = norms[j];
        if norms[j] > rank_tol && norms[j] > 0.0 {
            for i in 0..m {
                u[(i, k)] = b[(i, j)] / norms[j];
            }
        }
        for i in 0..n {
            vt[(k, i)] = v[(i, j)];
        }
        norms[j] = sigma[k];
    }

    complete_null_columns(&mut u, &sigma, rank_tol);

    SvdResult { u, sigma, vt }
}

/// Fills columns of U belonging to (numerically) zero singular values with an
/// orthonormal completion, so U always has orthonormal columns.
fn complete_null_columns(u: &mut Matrix, sigma: &[f64], rank_tol: f64) {
    let (m, p) = (u.rows(), u.cols());
    let mut next_basis = 0usize;
    for k in 0..p {
        if sigma[k] > rank_tol && sigma[k] > 0.0 {
            continue;
        }
        // Gram-Schmidt a canonical basis vector against all current columns.
        'candidates: while next_basis < m {
            let mut col = vec![0.0; m];
            col[next_basis] = 1.0;
            next_basis += 1;
            for j in 0..p {
                if j == k {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| u[(i, j)] * col[i]).sum();
                for i in 0..m {
                    col[i] -= dot * u[(i, j)];
                }
            }
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for i in 0..m {
                    u[(i, k)] = col[i] / norm;
                }
                break 'candidates;
            }
        }
    }
}

/// Makes the first non-negligible entry of each U column non-negative,
/// flipping the matching Vt row to keep the product unchanged.
fn fix_signs(out: &mut SvdResult) {
    let (m, p) = (out.u.rows(), out.u.cols());
    let n = out.vt.cols();
    for k in 0..p {
        let col_max = (0..m).map(|i| out.u[(i, k)].abs()).fold(0.0f64, f64::max);
        if col_max == 0.0 {
            continue;
        }
        let lead = (0..m)
            .map(|i| out.u[(i, k)])
            .find(|x| x.abs() > 1e-12 * col_max)
            .unwrap_or(0.0);
        if lead < 0.0 {
            for i in 0..m {
                out.u[(i, k)] = -out.u[(i, k)];
            }
            for j in 0..n {
                out.vt[(k, j)] = -out.vt[(k, j)];
            }
        }
    }
}
