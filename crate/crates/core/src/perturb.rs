//! Perturbation experiments: tax-scenario mapping, first-order portfolio
//! distortion, the isotropic invariance harness, and the distortion scaling
//! law.

use crate::error::{Error, Result};
use crate::linalg::{principal_angles, sample_gaussian_matrix, solve_spd, svd, Matrix};
use crate::numeric::{ls_slope, mean, variance_population, variance_sample};
use crate::rng::SeedSpec;
use crate::stationary::{
    core_satellite_split, default_hill_k, effective_rank, hill_estimator, ks_two_sample,
};
use crate::trainer::{sgd_train, LossSpec, TrainConfig, WeightTrajectory};
use crate::process::TrajectorySet;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A perturbation of the training objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbationSpec {
    /// Uniform rescaling of the loss by `k > 0`.
    Isotropic { k: f64 },
    /// Per-asset gradient modification with strengths `delta`.
    Anisotropic { delta: Vec<f64> },
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PerturbationSpec::Isotropic { k } => {
                if !(*k > 0.0) {
                    return Err(Error::InvalidParameter("k must be positive".into()));
                }
            }
            PerturbationSpec::Anisotropic { delta } => {
                if delta.is_empty() || !delta.iter().all(|d| d.is_finite()) {
                    return Err(Error::NonFinite("delta".into()));
                }
            }
        }
        Ok(())
    }

    fn apply(&self, base: LossSpec) -> LossSpec {
        match self {
            PerturbationSpec::Isotropic { k } => base.with_scale(*k),
            PerturbationSpec::Anisotropic { delta } => base.with_delta(delta.clone()),
        }
    }
}

/// Tax scenario: capital-value rate, distribution rate, wealth-tax rate, and
/// per-asset assessment fractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxScenario {
    pub tau_c: f64,
    pub tau_d: f64,
    pub tau_w: f64,
    /// Assessment fraction per asset class, each in [0, 1].
    pub assessment: Vec<f64>,
}

impl TaxScenario {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.tau_c) || !(0.0..1.0).contains(&self.tau_d) {
            return Err(Error::InvalidParameter(
                "tau_c and tau_d must lie in [0, 1)".into(),
            ));
        }
        if !(self.tau_w >= 0.0) {
            return Err(Error::InvalidParameter("tau_w must be >= 0".into()));
        }
        if self.assessment.is_empty()
            || !self.assessment.iter().all(|a| (0.0..=1.0).contains(a))
        {
            return Err(Error::InvalidParameter(
                "assessment fractions must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Classification of a tax scenario as a loss perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct TaxPerturbation {
    pub spec: PerturbationSpec,
    /// `(1 - tau_c)(1 - tau_d)`, reported for anisotropic scenarios too.
    pub isotropic_factor: f64,
    /// Cross-asset variance of the assessment fractions, both conventions.
    pub assessment_variance_population: f64,
    pub assessment_variance_sample: f64,
}

/// Maps a tax scenario onto a perturbation: uniform assessment is an
/// isotropic rescaling with `k = (1 - tau_c)(1 - tau_d)`; non-uniform
/// assessment is anisotropic with `delta_i = tau_w (1 - alpha_i)`.
pub fn tax_to_perturbation(s: &TaxScenario) -> Result<TaxPerturbation> {
    s.validate()?;
    let isotropic_factor = (1.0 - s.tau_c) * (1.0 - s.tau_d);
    let uniform = s
        .assessment
        .iter()
        .all(|a| *a == s.assessment[0]);
    let delta: Vec<f64> = s.assessment.iter().map(|a| s.tau_w * (1.0 - a)).collect();
    let spec = if uniform || s.tau_w == 0.0 {
        PerturbationSpec::Isotropic {
            k: isotropic_factor,
        }
    } else {
        PerturbationSpec::Anisotropic { delta }
    };
    let var_pop = variance_population(&s.assessment);
    let var_sample = if s.assessment.len() > 1 {
        variance_sample(&s.assessment)
    } else {
        0.0
    };
    Ok(TaxPerturbation {
        spec,
        isotropic_factor,
        assessment_variance_population: var_pop,
        assessment_variance_sample: var_sample,
    })
}

/// First-order portfolio weight distortion from an anisotropic perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    /// `-(1/gamma) V^{-1} (delta - mean(delta) 1)`.
    pub delta_w: Vec<f64>,
    /// Euclidean norm of `delta_w`.
    pub magnitude: f64,
    /// Population variance of `delta`.
    pub var_delta: f64,
}

/// Evaluates `delta_w = -(1/gamma) V^{-1} (delta - mean(delta) 1)` for a
/// symmetric positive definite covariance `V` (checked by factorization).
pub fn weight_distortion(gamma: f64, v: &Matrix, delta: &[f64]) -> Result<DistortionReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    if v.rows() != v.cols() || v.rows() != delta.len() {
        return Err(Error::DimensionMismatch(
            "covariance and delta dimensions must match".into(),
        ));
    }
    for i in 0..v.rows() {
        for j in 0..i {
            if (v[(i, j)] - v[(j, i)]).abs() > 1e-12 * v.frobenius_norm() {
                return Err(Error::InvalidParameter("covariance must be symmetric".into()));
            }
        }
    }
    let mean_delta = mean(delta);
    let centered: Vec<f64> = delta.iter().map(|d| d - mean_delta).collect();
    let solved = solve_spd(v, &centered)?;
    let delta_w: Vec<f64> = solved.iter().map(|x| -x / gamma).collect();
    let magnitude = delta_w.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(DistortionReport {
        delta_w,
        magnitude,
        var_delta: variance_population(delta),
    })
}

/// Distortion magnitudes across scalings of one pattern plus the fitted
/// log-log slope of `|delta_w|^2` against `Var(delta)`.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionScalingReport {
    pub scales: Vec<f64>,
    pub reports: Vec<DistortionReport>,
    /// Slope of `log |delta_w|^2` vs `log Var(delta)`.
    pub slope: f64,
}

/// Sweeps `delta = c * pattern` over `scales` and fits the scaling law.
pub fn distortion_scaling_experiment(
    pattern: &[f64],
    scales: &[f64],
    gamma: f64,
    v: &Matrix,
) -> Result<DistortionScalingReport> {
    if variance_population(pattern) == 0.0 {
        return Err(Error::Degenerate(
            "constant pattern has zero distortion; scaling fit rejected".into(),
        ));
    }
    if scales.len() < 2 || !scales.iter().all(|c| *c > 0.0) {
        return Err(Error::InvalidParameter(
            "need at least two positive scales".into(),
        ));
    }
    let mut reports = Vec::with_capacity(scales.len());
    let mut log_var = Vec::with_capacity(scales.len());
    let mut log_mag2 = Vec::with_capacity(scales.len());
    for &c in scales {
        let delta: Vec<f64> = pattern.iter().map(|p| c * p).collect();
        let rep = weight_distortion(gamma, v, &delta)?;
        log_var.push(rep.var_delta.ln());
        log_mag2.push((rep.magnitude * rep.magnitude).ln());
        reports.push(rep);
    }
    let slope = ls_slope(&log_var, &log_mag2);
    Ok(DistortionScalingReport {
        scales: scales.to_vec(),
        reports,
        slope,
    })
}

/// Configuration of the invariance pipeline: synthetic drift-regression data
/// with a rotated anisotropic input covariance and zero true drift, trained
/// by noisy SGD until the weight spectrum is stationary.
///
/// Zero true drift keeps the stationary weight law noise-dominated, which is
/// the regime where an isotropic rescaling acts as a pure change of scale on
/// the spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariancePipeline {
    pub n_assets: usize,
    /// Eigenvalues of the input covariance, strictly positive.
    pub input_spectrum: Vec<f64>,
    /// Diffusion constant of the increment noise (`y = sqrt(2 D dt) xi`).
    pub data_diffusion: f64,
    pub data_dt: f64,
    pub n_pairs: usize,
    pub eta: f64,
    pub noise_d: f64,
    pub burn_in: usize,
    /// Post-burn-in training steps.
    pub collect: usize,
    pub snapshot_every: usize,
    /// Quantile defining the tail (satellite) components.
    pub bulk_quantile: f64,
    /// Maximum allowed trailing-window drift of the mean singular value.
    pub stationarity_tol: f64,
}

impl InvariancePipeline {
    /// Desk-scale defaults used by the acceptance suite.
    pub fn default_acceptance() -> Self {
        Self {
            n_assets: 6,
            input_spectrum: vec![2.0, 1.68, 1.41, 1.19, 1.0, 0.5],
            data_diffusion: 0.25,
            data_dt: 0.2,
            n_pairs: 10_000,
            eta: 0.02,
            noise_d: 0.2,
            burn_in: 8_000,
            collect: 96_000,
            snapshot_every: 40,
            bulk_quantile: 0.8,
            stationarity_tol: 0.01,
        }
    }

    /// Anisotropic perturbation used alongside [`Self::default_acceptance`]:
    /// a graded per-asset pattern with positive cross-asset variance.
    pub fn default_anisotropic_delta() -> Vec<f64> {
        vec![2.0, 0.0, 1.0, 0.0, 0.5, 0.0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_assets < 2 || self.input_spectrum.len() != self.n_assets {
            return Err(Error::InvalidParameter(
                "input spectrum must list one eigenvalue per asset".into(),
            ));
        }
        if !self.input_spectrum.iter().all(|v| *v > 0.0) {
            return Err(Error::InvalidParameter(
                "input covariance eigenvalues must be positive".into(),
            ));
        }
        if !(self.data_diffusion > 0.0 && self.data_dt > 0.0) {
            return Err(Error::InvalidParameter("data noise must be positive".into()));
        }
        if self.n_pairs < 10 || self.collect == 0 || self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("run sizes too small".into()));
        }
        if !(self.bulk_quantile > 0.0 && self.bulk_quantile < 1.0) {
            return Err(Error::InvalidParameter("bulk_quantile in (0,1)".into()));
        }
        Ok(())
    }

    /// Fixed rotation mixing the input eigenbasis into asset coordinates.
    fn rotation(&self, seed: SeedSpec) -> Result<Matrix> {
        let g = sample_gaussian_matrix(self.n_assets, self.n_assets, 1.0, seed)?;
        Ok(svd(&g)?.u)
    }

    /// Regression pairs as length-2 paths: `x ~ N(0, Q diag(v) Q^T)`,
    /// increment `y = sqrt(2 D dt) xi` independent of `x`, so the
    /// least-squares drift is centered at zero.
    fn generate_data(&self, rotation: &Matrix, seed: SeedSpec) -> Result<TrajectorySet> {
        let n = self.n_assets;
        let mut rng = seed.rng();
        let y_amp = (2.0 * self.data_diffusion * self.data_dt).sqrt();
        let sqrt_spec: Vec<f64> = self.input_spectrum.iter().map(|v| v.sqrt()).collect();
        let mut paths = Vec::with_capacity(self.n_pairs);
        let mut z = vec![0.0; n];
        for _ in 0..self.n_pairs {
            for (zi, s) in z.iter_mut().zip(&sqrt_spec) {
                let g: f64 = StandardNormal.sample(&mut rng);
                *zi = s * g;
            }
            let x = rotation.matvec(&z);
            let x1: Vec<f64> = x
                .iter()
                .map(|xi| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    xi + y_amp * g
                })
                .collect();
            paths.push(vec![x, x1]);
        }
        TrajectorySet::from_paths(self.data_dt, paths)
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            eta: self.eta,
            noise_d: self.noise_d,
            steps: self.burn_in + self.collect,
            batch_size: self.n_pairs,
            record_every: self.snapshot_every,
        }
    }
}

/// Number of trailing windows used by the stationarity diagnostic.
const STATIONARITY_WINDOWS: usize = 10;

/// Spectral summaries of one training run, from post-burn-in snapshots.
struct RunSpectra {
    pooled: Vec<f64>,
    mean_spectrum: Vec<f64>,
    mean_gram: Matrix,
    /// Window means of the per-snapshot mean singular value.
    window_means: Vec<f64>,
}

fn collect_spectra(
    traj: &WeightTrajectory,
    pipeline: &InvariancePipeline,
) -> Result<RunSpectra> {
    let n = pipeline.n_assets;
    let post: Vec<&(usize, Matrix)> = traj
        .snapshots
        .iter()
        .filter(|(step, _)| *step > pipeline.burn_in)
        .collect();
    if post.len() < 2 * STATIONARITY_WINDOWS {
        return Err(Error::InsufficientData("too few post-burn-in snapshots".into()));
    }
    let mut pooled = Vec::with_capacity(post.len() * n);
    let mut mean_spectrum = vec![0.0; n];
    let mut mean_gram = Matrix::zeros(n, n);
    let mut mean_sigma_series = Vec::with_capacity(post.len());
    for (_, w) in &post {
        let s = svd(w)?;
        mean_sigma_series.push(mean(&s.sigma));
        for (acc, v) in mean_spectrum.iter_mut().zip(&s.sigma) {
            *acc += v;
        }
        pooled.extend_from_slice(&s.sigma);
        let gram = w.transpose().matmul(w);
        mean_gram = mean_gram.add(&gram);
    }
    let count = post.len() as f64;
    for v in mean_spectrum.iter_mut() {
        *v /= count;
    }
    let mean_gram = mean_gram.scale(1.0 / count);

    let per_window = mean_sigma_series.len() / STATIONARITY_WINDOWS;
    let window_means: Vec<f64> = (0..STATIONARITY_WINDOWS)
        .map(|w| mean(&mean_sigma_series[w * per_window..(w + 1) * per_window]))
        .collect();

    Ok(RunSpectra {
        pooled,
        mean_spectrum,
        mean_gram,
        window_means,
    })
}

/// Trailing-window stationarity check on baseline runs, averaged over
/// replicas: the fitted drift of the mean singular value per window must stay
/// below `tol` relative to its grand mean.
fn check_stationarity(window_means: &[Vec<f64>], tol: f64) -> Result<()> {
    let k = STATIONARITY_WINDOWS;
    let averaged: Vec<f64> = (0..k)
        .map(|w| mean(&window_means.iter().map(|r| r[w]).collect::<Vec<_>>()))
        .collect();
    let idx: Vec<f64> = (0..k).map(|i| i as f64).collect();
    let slope = ls_slope(&idx, &averaged);
    let grand = mean(&averaged);
    let drift = slope.abs() / grand;
    if drift > tol {
        return Err(Error::NotStationary { drift, limit: tol });
    }
    Ok(())
}

/// Leading right-singular subspace basis (n x dim) from the time-averaged
/// Gram matrix.
fn leading_subspace(gram: &Matrix, dim: usize) -> Result<Matrix> {
    let s = svd(gram)?;
    let n = gram.rows();
    let mut basis = Matrix::zeros(n, dim);
    for j in 0..dim {
        for i in 0..n {
            basis[(i, j)] = s.u[(i, j)];
        }
    }
    Ok(basis)
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Spectral comparison of a perturbed run against its matched-seed baseline.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    /// Hill-index difference (post minus pre) on pooled spectra.
    pub tail_exponent_delta: f64,
    /// Largest principal angle between leading right-singular subspaces.
    pub principal_angle_max: f64,
    /// Relative change of `sum(sigma)/max(sigma)`.
    pub r_eff_delta_sum: f64,
    /// Relative change of the participation ratio.
    pub r_eff_delta_participation: f64,
    /// Median singular value post / pre.
    pub scale_ratio: f64,
    /// Two-sample KS distance between median-normalized pooled spectra.
    pub ks_normalized: f64,
}

fn compare_runs(
    pre: &RunSpectra,
    post: &RunSpectra,
    pipeline: &InvariancePipeline,
) -> Result<InvarianceReport> {
    let hill_k = default_hill_k(pre.pooled.len());
    let hill_pre = hill_estimator(&pre.pooled, hill_k)?.alpha_hat;
    let hill_post = hill_estimator(&post.pooled, hill_k)?.alpha_hat;

    let (_, tail) = core_satellite_split(&pre.mean_spectrum, pipeline.bulk_quantile, None)?;
    let dim = tail.len().max(1);
    let basis_pre = leading_subspace(&pre.mean_gram, dim)?;
    let basis_post = leading_subspace(&post.mean_gram, dim)?;
    let angles = principal_angles(&basis_pre, &basis_post)?;
    let principal_angle_max = angles.last().copied().unwrap_or(0.0);

    let r_pre = effective_rank(&pre.mean_spectrum)?;
    let r_post = effective_rank(&post.mean_spectrum)?;

    let med_pre = median(&pre.pooled);
    let med_post = median(&post.pooled);
    let norm_pre: Vec<f64> = pre.pooled.iter().map(|s| s / med_pre).collect();
    let norm_post: Vec<f64> = post.pooled.iter().map(|s| s / med_post).collect();
    let ks_normalized = ks_two_sample(&norm_post, &norm_pre)?;

    Ok(InvarianceReport {
        tail_exponent_delta: hill_post - hill_pre,
        principal_angle_max,
        r_eff_delta_sum: (r_post.r_sum - r_pre.r_sum).abs() / r_pre.r_sum,
        r_eff_delta_participation: (r_post.r_participation - r_pre.r_participation).abs()
            / r_pre.r_participation,
        scale_ratio: med_post / med_pre,
        ks_normalized,
    })
}

/// Replicated invariance reports for one perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceSummary {
    pub perturbation: PerturbationSpec,
    pub reports: Vec<InvarianceReport>,
    /// Pooled post-burn-in singular values of the replica-0 perturbed run,
    /// for spectra artifacts.
    pub example_spectrum: Vec<f64>,
}

impl InvarianceSummary {
    pub fn mean_of<F: Fn(&InvarianceReport) -> f64>(&self, f: F) -> f64 {
        mean(&self.reports.iter().map(f).collect::<Vec<_>>())
    }

    pub fn stderr_of<F: Fn(&InvarianceReport) -> f64>(&self, f: F) -> f64 {
        let vals: Vec<f64> = self.reports.iter().map(f).collect();
        if vals.len() < 2 {
            return 0.0;
        }
        crate::numeric::standard_error(&vals)
    }
}

/// Full result of the invariance experiment.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceOutcome {
    pub summaries: Vec<InvarianceSummary>,
    /// Pooled post-burn-in singular values of the replica-0 baseline run.
    pub baseline_spectrum: Vec<f64>,
}

/// Runs the invariance experiment: for each replica, a baseline pipeline is
/// trained and compared against one matched-seed perturbed run per entry of
/// `perturbations`.
///
/// The baseline and each perturbed run share the data set and the gradient-
/// noise stream, so an identity perturbation reproduces the baseline bitwise
/// and all report deltas are exactly zero.
pub fn run_invariance_experiment(
    pipeline: &InvariancePipeline,
    perturbations: &[PerturbationSpec],
    replicas: usize,
    seed: SeedSpec,
) -> Result<InvarianceOutcome> {
    pipeline.validate()?;
    for p in perturbations {
        p.validate()?;
        if let PerturbationSpec::Anisotropic { delta } = p {
            if delta.len() != pipeline.n_assets {
                return Err(Error::DimensionMismatch(
                    "delta length must equal the asset count".into(),
                ));
            }
        }
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }

    let rotation = pipeline.rotation(seed.substream(u64::MAX))?;
    let config = pipeline.train_config();
    let w0 = Matrix::zeros(pipeline.n_assets, pipeline.n_assets);
    let base_loss = LossSpec::mle(pipeline.data_diffusion);

    type ReplicaOut = (Vec<f64>, Vec<f64>, Vec<(InvarianceReport, Vec<f64>)>);
    let per_replica: Vec<Result<ReplicaOut>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let data_seed = seed.substream(2 * r as u64);
            let train_seed = seed.substream(2 * r as u64 + 1);
            let data = pipeline.generate_data(&rotation, data_seed)?;
            let pre_traj = sgd_train(&data, w0.clone(), &base_loss, &config, train_seed)?;
            let pre = collect_spectra(&pre_traj, pipeline)?;
            let mut reports = Vec::with_capacity(perturbations.len());
            for p in perturbations {
                let spec = p.apply(base_loss.clone());
                let post_traj = sgd_train(&data, w0.clone(), &spec, &config, train_seed)?;
                let post = collect_spectra(&post_traj, pipeline)?;
                let report = compare_runs(&pre, &post, pipeline)?;
                let spectrum = if r == 0 { post.pooled } else { Vec::new() };
                reports.push((report, spectrum));
            }
            let baseline = if r == 0 { pre.pooled } else { Vec::new() };
            Ok((pre.window_means, baseline, reports))
        })
        .collect();

    let mut summaries: Vec<InvarianceSummary> = perturbations
        .iter()
        .map(|p| InvarianceSummary {
            perturbation: p.clone(),
            reports: Vec::with_capacity(replicas),
            example_spectrum: Vec::new(),
        })
        .collect();
    let mut baseline_windows = Vec::with_capacity(replicas);
    let mut baseline_spectrum = Vec::new();
    for replica in per_replica {
        let (windows, baseline, reports) = replica?;
        baseline_windows.push(windows);
        if !baseline.is_empty() {
            baseline_spectrum = baseline;
        }
        for (summary, (report, spectrum)) in summaries.iter_mut().zip(reports) {
            summary.reports.push(report);
            if !spectrum.is_empty() {
                summary.example_spectrum = spectrum;
            }
        }
    }
    check_stationarity(&baseline_windows, pipeline.stationarity_tol)?;
    Ok(InvarianceOutcome {
        summaries,
        baseline_spectrum,
    })
}
