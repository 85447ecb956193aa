//! Random matrix ensemble sampling.

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};
use crate::rng::SeedSpec;
use rand_distr::{Distribution, StandardNormal};

/// Samples an `m x n` matrix with i.i.d. centered normal entries of standard
/// deviation `scale`. Entries are drawn in row-major order from the stream,
/// so the result is reproducible for a fixed `SeedSpec`.
pub fn sample_gaussian_matrix(m: usize, n: usize, scale: f64, seed: SeedSpec) -> Result<Matrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("dimensions must be positive".into()));
    }
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale must be finite and non-negative, got {scale}"
        )));
    }
    let mut rng = seed.rng();
    let entries = (0..m * n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect();
    Matrix::from_rows(m, n, entries)
}

/// Samples a Wishart matrix `X X^T / t_periods` with `X` an `n x t_periods`
/// standard Gaussian matrix, together with its eigenvalue spectrum
/// (descending). The spectrum is obtained as the squared singular values of
/// `X / sqrt(t_periods)`.
pub fn sample_wishart_spectrum(
    n: usize,
    t_periods: usize,
    seed: SeedSpec,
) -> Result<(Matrix, Vec<f64>)> {
    let x = sample_gaussian_matrix(n, t_periods, 1.0, seed)?;
    let scaled = x.scale(1.0 / (t_periods as f64).sqrt());
    let s = svd(&scaled)?;
    let spectrum: Vec<f64> = s.sigma.iter().map(|v| v * v).collect();
    let wishart = scaled.matmul(&scaled.transpose());
    Ok((wishart, spectrum))
}
