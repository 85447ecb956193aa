//! Noisy gradient training of a linear weight matrix on trajectory data.
//!
//! The model is `v(x) = W x`; the loss is the quadratic drift-regression
//! objective `(1 / (4 D T dt)) sum_t |x_{t+1} - x_t - W x_t dt|^2`. Training
//! follows `W <- W - eta grad + sqrt(2 eta noise_d) G` per step with i.i.d.
//! standard normal `G`, i.e. one SGD step is one unit of time.

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};
use crate::process::TrajectorySet;
use crate::rng::SeedSpec;
use rand_distr::{Distribution, StandardNormal};
use std::collections::HashMap;
use std::io::Write;

const DIVERGENCE_NORM: f64 = 1e8;

/// SGD hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    /// Learning rate, positive.
    pub eta: f64,
    /// Injected gradient-noise diffusion constant, non-negative.
    pub noise_d: f64,
    pub steps: usize,
    /// Increments per batch; batches cycle through the data in index order.
    pub batch_size: usize,
    /// Snapshot spacing in steps.
    pub record_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter("eta must be >= 0".into()));
        }
        if !(self.noise_d >= 0.0) {
            return Err(Error::InvalidParameter("noise_d must be >= 0".into()));
        }
        if self.batch_size == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "batch_size and record_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Base objective.
#[derive(Debug, Clone)]
pub enum LossKind {
    /// Quadratic drift regression against trajectory increments, normalized
    /// by the data diffusion constant.
    MleDrift { diffusion_d: f64 },
    /// Constant loss (zero gradient); used for pure-noise diffusion runs.
    Constant,
}

/// Objective plus the perturbations applied to it.
#[derive(Debug, Clone)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Isotropic multiplier applied to loss and gradient.
    pub scale_k: f64,
    /// Optional per-asset (per-column) gradient modification: entry `(t, i)`
    /// of the gradient gains `delta[i] * W[(t, i)]`.
    pub delta: Option<Vec<f64>>,
}

impl LossSpec {
    pub fn mle(diffusion_d: f64) -> Self {
        Self {
            kind: LossKind::MleDrift { diffusion_d },
            scale_k: 1.0,
            delta: None,
        }
    }

    pub fn constant() -> Self {
        Self {
            kind: LossKind::Constant,
            scale_k: 1.0,
            delta: None,
        }
    }

    pub fn with_scale(mut self, k: f64) -> Self {
        self.scale_k = k;
        self
    }

    pub fn with_delta(mut self, delta: Vec<f64>) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn validate(&self, n_assets: usize) -> Result<()> {
        if !(self.scale_k > 0.0) {
            return Err(Error::InvalidParameter("scale_k must be positive".into()));
        }
        if let LossKind::MleDrift { diffusion_d } = self.kind {
            if !(diffusion_d > 0.0) {
                return Err(Error::InvalidParameter(
                    "loss diffusion constant must be positive".into(),
                ));
            }
        }
        if let Some(delta) = &self.delta {
            if delta.len() != n_assets {
                return Err(Error::DimensionMismatch(format!(
                    "delta length {} != asset count {n_assets}",
                    delta.len()
                )));
            }
            if !delta.iter().all(|d| d.is_finite()) {
                return Err(Error::NonFinite("delta".into()));
            }
        }
        Ok(())
    }
}

/// Consecutive-state increments `(x_t, y_t = x_{t+1} - x_t)` extracted from a
/// trajectory set, the unit of data the loss operates on.
#[derive(Debug, Clone)]
pub struct IncrementBatch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub dt: f64,
}

impl IncrementBatch {
    pub fn from_trajectories(data: &TrajectorySet) -> Self {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for path in &data.values {
            for pair in path.windows(2) {
                inputs.push(pair[0].clone());
                targets.push(
                    pair[1]
                        .iter()
                        .zip(&pair[0])
                        .map(|(b, a)| b - a)
                        .collect(),
                );
            }
        }
        Self {
            inputs,
            targets,
            dt: data.dt,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn select(&self, indices: impl Iterator<Item = usize>) -> SufficientStats {
        let n = self.inputs.first().map_or(0, |x| x.len());
        let m = self.targets.first().map_or(0, |y| y.len());
        let mut stats = SufficientStats {
            sxx: Matrix::zeros(n.max(1), n.max(1)),
            syx: Matrix::zeros(m.max(1), n.max(1)),
            syy: 0.0,
            count: 0,
        };
        for t in indices {
            let x = &self.inputs[t];
            let y = &self.targets[t];
            for i in 0..n {
                for j in 0..n {
                    stats.sxx[(i, j)] += x[i] * x[j];
                }
            }
            for a in 0..m {
                for j in 0..n {
                    stats.syx[(a, j)] += y[a] * x[j];
                }
            }
            stats.syy += y.iter().map(|v| v * v).sum::<f64>();
            stats.count += 1;
        }
        stats
    }
}

/// Accumulated second moments of one batch, enough to evaluate the quadratic
/// loss and its gradient without revisiting the samples.
#[derive(Debug, Clone)]
struct SufficientStats {
    sxx: Matrix,
    syx: Matrix,
    syy: f64,
    count: usize,
}

impl SufficientStats {
    /// `loss = (syy - 2 dt <W, syx> + dt^2 tr(W' W sxx)) / (4 D T dt)`.
    fn loss(&self, w: &Matrix, dt: f64, diffusion_d: f64) -> f64 {
        let wsxx = w.matmul(&self.sxx);
        let mut cross = 0.0;
        let mut quad = 0.0;
        for (a, b) in w.entries().iter().zip(self.syx.entries()) {
            cross += a * b;
        }
        for (a, b) in w.entries().iter().zip(wsxx.entries()) {
            quad += a * b;
        }
        (self.syy - 2.0 * dt * cross + dt * dt * quad)
            / (4.0 * diffusion_d * self.count as f64 * dt)
    }

    /// `grad = (dt W sxx - syx) / (2 D T)`.
    fn gradient(&self, w: &Matrix, dt: f64, diffusion_d: f64) -> Matrix {
        let scale = 1.0 / (2.0 * diffusion_d * self.count as f64);
        w.matmul(&self.sxx)
            .scale(dt * scale)
            .sub(&self.syx.scale(scale))
    }
}

fn apply_perturbations(loss: f64, mut grad: Matrix, w: &Matrix, spec: &LossSpec) -> (f64, Matrix) {
    let mut loss = loss * spec.scale_k;
    grad = grad.scale(spec.scale_k);
    if let Some(delta) = &spec.delta {
        let mut quad = 0.0;
        for t in 0..w.rows() {
            for (i, d) in delta.iter().enumerate() {
                grad[(t, i)] += d * w[(t, i)];
                quad += d * w[(t, i)] * w[(t, i)];
            }
        }
        loss += 0.5 * quad;
    }
    (loss, grad)
}

/// Loss value and exact gradient of the (perturbed) objective on one batch.
pub fn mle_loss_and_gradient(
    w: &Matrix,
    batch: &IncrementBatch,
    spec: &LossSpec,
) -> Result<(f64, Matrix)> {
    spec.validate(w.cols())?;
    let (base_loss, base_grad) = match spec.kind {
        LossKind::Constant => (0.0, Matrix::zeros(w.rows(), w.cols())),
        LossKind::MleDrift { diffusion_d } => {
            if batch.is_empty() {
                return Err(Error::InsufficientData("empty batch".into()));
            }
            if batch.inputs[0].len() != w.cols() || batch.targets[0].len() != w.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "batch is {}-in/{}-out but W is {}x{}",
                    batch.inputs[0].len(),
                    batch.targets[0].len(),
                    w.rows(),
                    w.cols()
                )));
            }
            let stats = batch.select(0..batch.len());
            (
                stats.loss(w, batch.dt, diffusion_d),
                stats.gradient(w, batch.dt, diffusion_d),
            )
        }
    };
    Ok(apply_perturbations(base_loss, base_grad, w, spec))
}

/// Recorded training path.
#[derive(Debug, Clone)]
pub struct WeightTrajectory {
    /// `(step, W)` snapshots, step strictly increasing, step 0 included.
    pub snapshots: Vec<(usize, Matrix)>,
    pub config: TrainConfig,
    pub final_loss: f64,
}

impl WeightTrajectory {
    pub fn final_weights(&self) -> &Matrix {
        &self.snapshots.last().unwrap().1
    }

    /// CSV serialization: `step,row,col,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,row,col,value")?;
        for (step, m) in &self.snapshots {
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    writeln!(w, "{step},{r},{c},{}", m[(r, c)])?;
                }
            }
        }
        Ok(())
    }
}

/// Trains `w0` by noisy SGD on the given objective.
///
/// Batches are contiguous cyclic windows over the increments, per-batch
/// second moments are cached, and gradient noise is drawn row-major from the
/// seed's stream, so a run is fully determined by `(config, seed)`.
pub fn sgd_train(
    data: &TrajectorySet,
    w0: Matrix,
    loss: &LossSpec,
    config: &TrainConfig,
    seed: SeedSpec,
) -> Result<WeightTrajectory> {
    config.validate()?;
    loss.validate(w0.cols())?;

    let batch = IncrementBatch::from_trajectories(data);
    let is_mle = matches!(loss.kind, LossKind::MleDrift { .. });
    if is_mle && batch.is_empty() {
        return Err(Error::InsufficientData("no increments in data".into()));
    }
    let total = batch.len();
    let mut stats_cache: HashMap<usize, SufficientStats> = HashMap::new();

    let mut rng = seed.rng();
    let mut w = w0;
    let (m, n) = (w.rows(), w.cols());
    let noise_amp = (2.0 * config.eta * config.noise_d).sqrt();
    let mut snapshots = vec![(0usize, w.clone())];
    let mut final_loss = 0.0;

    for step in 0..config.steps {
        let (loss_val, grad) = if is_mle {
            let start = (step * config.batch_size) % total;
            let stats = stats_cache.entry(start).or_insert_with(|| {
                let idx = (0..config.batch_size.min(total)).map(|i| (start + i) % total);
                batch.select(idx)
            });
            let diffusion_d = match loss.kind {
                LossKind::MleDrift { diffusion_d } => diffusion_d,
                LossKind::Constant => unreachable!(),
            };
            (
                stats.loss(&w, batch.dt, diffusion_d),
                stats.gradient(&w, batch.dt, diffusion_d),
            )
        } else {
            (0.0, Matrix::zeros(m, n))
        };
        let (loss_val, grad) = apply_perturbations(loss_val, grad, &w, loss);
        final_loss = loss_val;

        for (wi, gi) in w.entries_mut().iter_mut().zip(grad.entries()) {
            *wi -= config.eta * gi;
        }
        if noise_amp > 0.0 {
            for wi in w.entries_mut().iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *wi += noise_amp * g;
            }
        }

        let norm = w.frobenius_norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged {
                step: step + 1,
                norm,
            });
        }
        if (step + 1) % config.record_every == 0 || step + 1 == config.steps {
            snapshots.push((step + 1, w.clone()));
        }
    }

    Ok(WeightTrajectory {
        snapshots,
        config: *config,
        final_loss,
    })
}

/// Empirical per-sample gradient covariance and its distance from the best
/// Kronecker product.
#[derive(Debug, Clone)]
pub struct KroneckerReport {
    /// `mn x mn` second moment of per-sample gradients (row-major vec).
    pub empirical: Matrix,
    /// Relative Frobenius error of the nearest Kronecker product.
    pub kronecker_fit_error: f64,
    /// Set when there are fewer samples than `m * n`.
    pub low_rank: bool,
}

/// Measures how close the per-sample gradient covariance is to a Kronecker
/// product `S_r (x) S_x`.
///
/// Residuals use the drift convention `r_t = y_t / dt - W x_t`, per-sample
/// gradients are `-2 r_t x_t'`, and the nearest Kronecker product is found by
/// the rearrangement trick: reshape the covariance so Kronecker products map
/// to rank-one matrices, then read the error off the singular values.
pub fn gradient_covariance_check(data: &TrajectorySet, w: &Matrix) -> Result<KroneckerReport> {
    let batch = IncrementBatch::from_trajectories(data);
    if batch.is_empty() {
        return Err(Error::InsufficientData("no increments in data".into()));
    }
    if batch.inputs[0].len() != w.cols() || batch.targets[0].len() != w.rows() {
        return Err(Error::DimensionMismatch("data/weight shape".into()));
    }
    let (m, n) = (w.rows(), w.cols());
    let dim = m * n;
    let samples = batch.len();

    let mut c = Matrix::zeros(dim, dim);
    let mut g = vec![0.0; dim];
    for t in 0..samples {
        let x = &batch.inputs[t];
        let y = &batch.targets[t];
        let wx = w.matvec(x);
        for a in 0..m {
            let r = y[a] / batch.dt - wx[a];
            for i in 0..n {
                g[a * n + i] = -2.0 * r * x[i];
            }
        }
        for p in 0..dim {
            if g[p] == 0.0 {
                continue;
            }
            for q in 0..dim {
                c[(p, q)] += g[p] * g[q];
            }
        }
    }
    let c = c.scale(1.0 / samples as f64);

    let norm = c.frobenius_norm();
    if norm == 0.0 {
        return Ok(KroneckerReport {
            empirical: c,
            kronecker_fit_error: 0.0,
            low_rank: samples < dim,
        });
    }

    // rearrangement: R[(a,b),(i,j)] = C[(a,i),(b,j)]
    let mut r = Matrix::zeros(m * m, n * n);
    for a in 0..m {
        for b in 0..m {
            for i in 0..n {
                for j in 0..n {
                    r[(a * m + b, i * n + j)] = c[(a * n + i, b * n + j)];
                }
            }
        }
    }
    let s = svd(&r)?;
    let total: f64 = s.sigma.iter().map(|v| v * v).sum();
    let residual = (total - s.sigma[0] * s.sigma[0]).max(0.0);
    Ok(KroneckerReport {
        empirical: c,
        kronecker_fit_error: (residual / total).sqrt(),
        low_rank: samples < dim,
    })
}
