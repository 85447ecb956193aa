//! Estimators for spectral observables: stationary singular-value densities,
//! Hill tail indices, effective spectral rank, core-satellite partitions, and
//! Kolmogorov-Smirnov distances.

use crate::error::{Error, Result};
use crate::numeric::simpson;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Normalized histogram of a sample.
#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub bin_edges: Vec<f64>,
    /// Bin masses, non-negative, summing to 1.
    pub mass: Vec<f64>,
    pub sample_count: usize,
}

impl DensityEstimate {
    /// Histogram with `bins` equal-width bins spanning the sample range.
    /// Samples outside `[lo, hi)` clamp into the edge bins.
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if samples.is_empty() || bins == 0 || !(hi > lo) {
            return Err(Error::InvalidParameter("empty histogram spec".into()));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in samples {
            let idx = (((x - lo) / width) as isize).clamp(0, bins as isize - 1) as usize;
            counts[idx] += 1;
        }
        let total = samples.len() as f64;
        let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        Ok(Self {
            bin_edges,
            mass,
            sample_count: samples.len(),
        })
    }

    /// CSV serialization: `bin_left,bin_right,mass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_left,bin_right,mass")?;
        for (i, m) in self.mass.iter().enumerate() {
            writeln!(w, "{},{},{}", self.bin_edges[i], self.bin_edges[i + 1], m)?;
        }
        Ok(())
    }
}

/// Parameters of the stationary singular-value law
/// `p(sigma) ~ sigma^e exp(-beta1 sigma^2 / (4 eta D))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StationaryModel {
    pub m: usize,
    pub n: usize,
    /// Mean-field restoring constant, positive.
    pub beta1: f64,
    /// Learning rate, positive.
    pub eta: f64,
    /// Noise diffusion constant, positive.
    pub noise_d: f64,
}

/// Which power-law prefactor exponent to use.
///
/// The printed stationary law carries `sigma^(m-n+1)`, while the stationary
/// Fokker-Planck solution of the implemented one-dimensional drift carries
/// `sigma^((m-n+1)/2)`. Both are available; simulation checks use `FpOracle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentConvention {
    Paper,
    FpOracle,
}

impl StationaryModel {
    pub fn validate(&self) -> Result<()> {
        if self.m < self.n || self.n < 1 {
            return Err(Error::InvalidParameter(
                "stationary model requires m >= n >= 1".into(),
            ));
        }
        if !(self.beta1 > 0.0 && self.eta > 0.0 && self.noise_d > 0.0) {
            return Err(Error::InvalidParameter(
                "beta1, eta, noise_d must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Power-law prefactor exponent under the given convention.
    pub fn exponent(&self, convention: ExponentConvention) -> f64 {
        let e = (self.m - self.n + 1) as f64;
        match convention {
            ExponentConvention::Paper => e,
            ExponentConvention::FpOracle => e / 2.0,
        }
    }

    /// Gaussian decay rate `beta1 / (4 eta D)`.
    pub fn decay_rate(&self) -> f64 {
        self.beta1 / (4.0 * self.eta * self.noise_d)
    }

    /// Mode of the density, `sqrt(2 e eta D / beta1)`.
    pub fn mode(&self, convention: ExponentConvention) -> f64 {
        (self.exponent(convention) / (2.0 * self.decay_rate())).sqrt()
    }

    /// Normalized density with quadrature normalization cached.
    pub fn density(&self, convention: ExponentConvention) -> Result<StationarySvDensity> {
        StationarySvDensity::new(*self, convention)
    }
}

/// Cached, normalized stationary singular-value density with CDF/quantile
/// evaluation on a precomputed grid.
#[derive(Debug, Clone)]
pub struct StationarySvDensity {
    exponent: f64,
    rate: f64,
    normalizer: f64,
    grid: Vec<f64>,
    cdf_grid: Vec<f64>,
}

impl StationarySvDensity {
    const GRID: usize = 4096;

    fn new(model: StationaryModel, convention: ExponentConvention) -> Result<Self> {
        model.validate()?;
        let exponent = model.exponent(convention);
        let rate = model.decay_rate();
        // the density is negligible beyond mode + many widths
        let upper = ((exponent + 1.0) / (2.0 * rate)).sqrt() + 10.0 / (2.0 * rate).sqrt();
        let raw = |s: f64| {
            if s <= 0.0 {
                0.0
            } else {
                s.powf(exponent) * (-rate * s * s).exp()
            }
        };
        let normalizer = simpson(raw, 0.0, upper, 40_000);
        let mut grid = Vec::with_capacity(Self::GRID + 1);
        let mut cdf_grid = Vec::with_capacity(Self::GRID + 1);
        let h = upper / Self::GRID as f64;
        let mut acc = 0.0;
        grid.push(0.0);
        cdf_grid.push(0.0);
        for i in 1..=Self::GRID {
            let a = (i - 1) as f64 * h;
            let b = i as f64 * h;
            acc += simpson(raw, a, b, 4) / normalizer;
            grid.push(b);
            cdf_grid.push(acc.min(1.0));
        }
        Ok(Self {
            exponent,
            rate,
            normalizer,
            grid,
            cdf_grid,
        })
    }

    pub fn pdf(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        sigma.powf(self.exponent) * (-self.rate * sigma * sigma).exp() / self.normalizer
    }

    pub fn cdf(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        let upper = *self.grid.last().unwrap();
        if sigma >= upper {
            return 1.0;
        }
        let h = upper / Self::GRID as f64;
        let idx = (sigma / h) as usize;
        let frac = (sigma - self.grid[idx]) / h;
        self.cdf_grid[idx] + frac * (self.cdf_grid[idx + 1] - self.cdf_grid[idx])
    }

    /// Quantile by bisection on the cached CDF grid.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let idx = self.cdf_grid.partition_point(|&c| c < p);
        if idx == 0 {
            return self.grid[0];
        }
        if idx > Self::GRID {
            return *self.grid.last().unwrap();
        }
        let (c0, c1) = (self.cdf_grid[idx - 1], self.cdf_grid[idx]);
        let t = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.0 };
        self.grid[idx - 1] + t * (self.grid[idx] - self.grid[idx - 1])
    }
}

/// Normalized stationary density value at one point.
pub fn stationary_sv_density(
    sigma: f64,
    model: &StationaryModel,
    convention: ExponentConvention,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    Ok(model.density(convention)?.pdf(sigma))
}

/// Hill maximum-likelihood tail-index fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParetoFit {
    pub alpha_hat: f64,
    /// Number of upper order statistics used.
    pub k_tail: usize,
    /// Asymptotic standard error `alpha_hat / sqrt(k_tail)`.
    pub stderr: f64,
}

/// Hill estimator over the `k_tail` largest order statistics:
/// `alpha = k / sum_i log(x_(i) / x_(k+1))`.
pub fn hill_estimator(samples: &[f64], k_tail: usize) -> Result<ParetoFit> {
    if k_tail < 10 {
        return Err(Error::InsufficientData(
            "hill estimator needs at least 10 tail points".into(),
        ));
    }
    if k_tail >= samples.len() {
        return Err(Error::InsufficientData(format!(
            "k_tail {} must be below the sample count {}",
            k_tail,
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "hill estimator requires positive samples, got {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let threshold = sorted[k_tail];
    let sum_log: f64 = sorted[..k_tail].iter().map(|x| (x / threshold).ln()).sum();
    if sum_log <= 0.0 {
        return Err(Error::Degenerate(
            "zero log-spacings in the tail (identical samples?)".into(),
        ));
    }
    let alpha_hat = k_tail as f64 / sum_log;
    Ok(ParetoFit {
        alpha_hat,
        k_tail,
        stderr: alpha_hat / (k_tail as f64).sqrt(),
    })
}

/// Default tail size: 5% of the sample, floored at 10.
pub fn default_hill_k(n_samples: usize) -> usize {
    ((n_samples as f64 * 0.05) as usize).max(10)
}

/// Scale-invariant factor-count summaries of a spectrum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EffectiveRankReport {
    /// `sum(sigma) / max(sigma)`.
    pub r_sum: f64,
    /// `(sum sigma)^2 / sum(sigma^2)` (participation ratio).
    pub r_participation: f64,
}

pub fn effective_rank(sigma: &[f64]) -> Result<EffectiveRankReport> {
    if sigma.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if let Some(bad) = sigma.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "spectrum entries must be non-negative, got {bad}"
        )));
    }
    let sum: f64 = sigma.iter().sum();
    let max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let sum_sq: f64 = sigma.iter().map(|x| x * x).sum();
    if max == 0.0 {
        return Err(Error::Degenerate("all-zero spectrum".into()));
    }
    Ok(EffectiveRankReport {
        r_sum: sum / max,
        r_participation: sum * sum / sum_sq,
    })
}

/// Splits spectrum indices into (bulk, tail) around a quantile threshold.
///
/// The threshold is the `bulk_quantile` quantile of the fitted stationary
/// model when one is given, otherwise of the empirical values themselves.
/// Components strictly above the threshold land in the tail.
pub fn core_satellite_split(
    sigma: &[f64],
    bulk_quantile: f64,
    model: Option<&StationarySvDensity>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if sigma.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if !(bulk_quantile > 0.0 && bulk_quantile < 1.0) {
        return Err(Error::InvalidParameter(
            "bulk_quantile must lie strictly between 0 and 1".into(),
        ));
    }
    let threshold = match model {
        Some(d) => d.quantile(bulk_quantile),
        None => empirical_quantile(sigma, bulk_quantile),
    };
    let mut bulk = Vec::new();
    let mut tail = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        if s > threshold {
            tail.push(i);
        } else {
            bulk.push(i);
        }
    }
    Ok((bulk, tail))
}

/// Smallest sample value whose empirical CDF reaches `p`.
fn empirical_quantile(xs: &[f64], p: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of `samples`
/// and a model CDF.
///
/// The deviation is evaluated at the sample points (ties collapsed), which is
/// exact for model CDFs sharing the sample's jump points and within `1/n` of
/// the classical statistic for continuous models.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], model_cdf: F) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(
            "ks distance needs at least 100 samples".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut dist = 0.0f64;
    let mut i = 0usize;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let ecdf = j as f64 / n;
        dist = dist.max((model_cdf(x) - ecdf).abs());
        i = j;
    }
    Ok(dist)
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|` between the
/// empirical CDFs of two samples (exact merge walk; identical samples give
/// exactly zero).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut dist = 0.0f64;
    while i < sa.len() || j < sb.len() {
        let v = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < sa.len() && sa[i] == v {
            i += 1;
        }
        while j < sb.len() && sb[j] == v {
            j += 1;
        }
        dist = dist.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(dist)
}
