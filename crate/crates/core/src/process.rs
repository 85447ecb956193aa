//! Trajectory generation for the data-generating diffusion and the
//! additive-to-multiplicative crossover diagnostics.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SeedSpec;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::io::Write;

/// Drift field `v(x)` of the data diffusion `dx = v(x) dt + sqrt(2 D) dB`.
#[derive(Debug, Clone)]
pub enum DriftSpec {
    /// `v(x) = theta (mu - x)`, componentwise.
    OrnsteinUhlenbeck { theta: f64, mu: f64 },
    /// `v(x)_i = sum_j c_j x_i^j`, componentwise, degree <= 5.
    Polynomial { coefficients: Vec<f64> },
    /// `v(x) = A x`.
    LinearMatrix { a: Matrix },
}

impl DriftSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            DriftSpec::OrnsteinUhlenbeck { theta, .. } => {
                if !(*theta > 0.0) {
                    return Err(Error::InvalidParameter(
                        "OU rate theta must be positive".into(),
                    ));
                }
            }
            DriftSpec::Polynomial { coefficients } => {
                if coefficients.len() > 6 {
                    return Err(Error::InvalidParameter(
                        "polynomial drift degree must be <= 5".into(),
                    ));
                }
            }
            DriftSpec::LinearMatrix { a } => {
                if a.rows() != dim || a.cols() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "linear drift matrix must be {dim}x{dim}, got {}x{}",
                        a.rows(),
                        a.cols()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            DriftSpec::OrnsteinUhlenbeck { theta, mu } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = theta * (mu - xi);
                }
            }
            DriftSpec::Polynomial { coefficients } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    let mut acc = 0.0;
                    for &c in coefficients.iter().rev() {
                        acc = acc * xi + c;
                    }
                    *o = acc;
                }
            }
            DriftSpec::LinearMatrix { a } => {
                let v = a.matvec(x);
                out.copy_from_slice(&v);
            }
        }
    }
}

/// A set of simulated paths on a uniform time grid.
///
/// Paths that left the finite range during integration are excluded and only
/// counted, so downstream statistics never see non-finite states.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    pub dt: f64,
    /// `values[path][step][component]`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// Number of paths dropped because a state became non-finite.
    pub divergent: usize,
}

impl TrajectorySet {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |p| p[0].len())
    }

    /// Builds a trajectory set directly from per-path state sequences.
    pub fn from_paths(dt: f64, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("no paths".into()));
        }
        let len = values[0].len();
        let dim = values[0].first().map_or(0, |s| s.len());
        for p in &values {
            if p.len() != len {
                return Err(Error::DimensionMismatch("ragged path lengths".into()));
            }
            for s in p {
                if s.len() != dim {
                    return Err(Error::DimensionMismatch("ragged state dimension".into()));
                }
                if !s.iter().all(|x| x.is_finite()) {
                    return Err(Error::NonFinite("trajectory state".into()));
                }
            }
        }
        Ok(Self {
            dt,
            values,
            divergent: 0,
        })
    }

    /// CSV serialization: `path_id,step,component_index,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "path_id,step,component_index,value")?;
        for (p, path) in self.values.iter().enumerate() {
            for (s, state) in path.iter().enumerate() {
                for (c, v) in state.iter().enumerate() {
                    writeln!(w, "{p},{s},{c},{v}")?;
                }
            }
        }
        Ok(())
    }
}

/// One Euler-Maruyama step `x += v(x) dt + sqrt(2 D dt) * noise`.
///
/// `noise` holds one standard normal draw per component; exposing the step at
/// this granularity lets refinement studies couple coarse and fine grids to a
/// common Brownian path.
pub fn euler_maruyama_step(
    x: &mut [f64],
    drift: &DriftSpec,
    diffusion_d: f64,
    dt: f64,
    noise: &[f64],
    scratch: &mut [f64],
) {
    drift.eval(x, scratch);
    let amp = (2.0 * diffusion_d * dt).sqrt();
    for i in 0..x.len() {
        x[i] += scratch[i] * dt + amp * noise[i];
    }
}

/// Euler-Maruyama integration of `dx = v(x) dt + sqrt(2 D) dB`.
///
/// Paths are independent; path `i` draws from `seed.substream(i)`, so parallel
/// and serial generation produce identical output.
pub fn simulate_sde(
    drift: &DriftSpec,
    diffusion_d: f64,
    x0: &[f64],
    dt: f64,
    steps: usize,
    n_paths: usize,
    seed: SeedSpec,
) -> Result<TrajectorySet> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    if !(diffusion_d >= 0.0) {
        return Err(Error::InvalidParameter(
            "diffusion constant must be non-negative".into(),
        ));
    }
    if x0.is_empty() || n_paths == 0 {
        return Err(Error::InvalidParameter("empty state or no paths".into()));
    }
    drift.validate(x0.len())?;

    let dim = x0.len();
    let paths: Vec<Option<Vec<Vec<f64>>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = seed.substream(p as u64).rng();
            let mut x = x0.to_vec();
            let mut noise = vec![0.0; dim];
            let mut scratch = vec![0.0; dim];
            let mut path = Vec::with_capacity(steps + 1);
            path.push(x.clone());
            for _ in 0..steps {
                for n in noise.iter_mut() {
                    *n = StandardNormal.sample(&mut rng);
                }
                euler_maruyama_step(&mut x, drift, diffusion_d, dt, &noise, &mut scratch);
                if !x.iter().all(|v| v.is_finite()) {
                    return None;
                }
                path.push(x.clone());
            }
            Some(path)
        })
        .collect();

    let divergent = paths.iter().filter(|p| p.is_none()).count();
    let values: Vec<Vec<Vec<f64>>> = paths.into_iter().flatten().collect();
    if values.is_empty() {
        return Err(Error::Degenerate("all paths diverged".into()));
    }
    Ok(TrajectorySet {
        dt,
        values,
        divergent,
    })
}

/// Crossover sampler `x = x0 (1 + q xi)^(1/q)` with `xi ~ N(0, sigma_xi^2)`.
#[derive(Debug, Clone, Copy)]
pub struct QTransformSpec {
    /// Initial level, positive.
    pub x0: f64,
    /// Additivity index in [0, 1]; 0 is the multiplicative limit `x0 e^xi`.
    pub q: f64,
    pub sigma_xi: f64,
}

impl QTransformSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0) {
            return Err(Error::InvalidParameter("x0 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter("q must lie in [0, 1]".into()));
        }
        if !(self.sigma_xi >= 0.0) {
            return Err(Error::InvalidParameter("sigma_xi must be >= 0".into()));
        }
        Ok(())
    }

    /// Deterministic transform of a single fundamental draw.
    pub fn transform(&self, xi: f64) -> Option<f64> {
        if self.q == 0.0 {
            return Some(self.x0 * xi.exp());
        }
        let base = 1.0 + self.q * xi;
        if base <= 0.0 {
            return None;
        }
        Some(self.x0 * base.powf(1.0 / self.q))
    }
}

/// Samples from the crossover transform with rejection of draws where
/// `1 + q xi <= 0` (the formula leaves the real line there).
#[derive(Debug, Clone)]
pub struct QTransformSample {
    pub values: Vec<f64>,
    pub rejections: usize,
    /// Set when more than 1% of draws were rejected, i.e. `sigma_xi` is too
    /// large for the expansion to be trustworthy.
    pub rejection_warning: bool,
}

pub fn q_transform_sample(
    spec: &QTransformSpec,
    n_samples: usize,
    seed: SeedSpec,
) -> Result<QTransformSample> {
    spec.validate()?;
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(n_samples);
    let mut rejections = 0usize;
    while values.len() < n_samples {
        let xi: f64 = {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.sigma_xi * z
        };
        match spec.transform(xi) {
            Some(x) => values.push(x),
            None => rejections += 1,
        }
    }
    let rejection_warning = rejections as f64 > 0.01 * n_samples as f64;
    Ok(QTransformSample {
        values,
        rejections,
        rejection_warning,
    })
}

/// Standardized third central moment with the small-sample bias correction
/// `G1 = g1 sqrt(n (n-1)) / (n - 2)`.
pub fn sample_skewness(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InsufficientData(
            "skewness needs at least 3 samples".into(),
        ));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for x in samples {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    if m2 == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let g1 = m3 / m2.powf(1.5);
    Ok(g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0))
}
