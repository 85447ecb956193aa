//! Experiment configuration: one TOML file per experiment, strictly parsed
//! (unknown keys anywhere are rejected before any computation).

use serde::{Deserialize, Serialize};
use svlab_core::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    StationarySpectrum,
    Invariance,
    Anisotropic,
    Kesten,
    BouchaudMezard,
    Ergodicity,
    Qtransform,
    MultDbm,
    KroneckerCheck,
}

impl ExperimentKind {
    pub fn all() -> &'static [(ExperimentKind, &'static str)] {
        &[
            (
                ExperimentKind::StationarySpectrum,
                "singular-value SDE ensemble vs its stationary Fokker-Planck law",
            ),
            (
                ExperimentKind::Invariance,
                "isotropic/anisotropic loss perturbations on the training pipeline",
            ),
            (
                ExperimentKind::Anisotropic,
                "first-order portfolio distortion and its variance scaling law",
            ),
            (
                ExperimentKind::Kesten,
                "Kesten process stationary tail vs the zero-flux prediction",
            ),
            (
                ExperimentKind::BouchaudMezard,
                "mean-field exchange model: condensation vs power-law shares",
            ),
            (
                ExperimentKind::Ergodicity,
                "ensemble vs time-average growth rates of a multiplicative ensemble",
            ),
            (
                ExperimentKind::Qtransform,
                "additive-to-multiplicative crossover sampler and its skewness law",
            ),
            (
                ExperimentKind::MultDbm,
                "multiplicative Dyson Brownian motion ensemble mean",
            ),
            (
                ExperimentKind::KroneckerCheck,
                "Kronecker structure of the per-sample gradient covariance",
            ),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::StationarySpectrum => "stationary_spectrum",
            ExperimentKind::Invariance => "invariance",
            ExperimentKind::Anisotropic => "anisotropic",
            ExperimentKind::Kesten => "kesten",
            ExperimentKind::BouchaudMezard => "bouchaud_mezard",
            ExperimentKind::Ergodicity => "ergodicity",
            ExperimentKind::Qtransform => "qtransform",
            ExperimentKind::MultDbm => "mult_dbm",
            ExperimentKind::KroneckerCheck => "kronecker_check",
        }
    }
}

/// Top-level config file layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub parameters: toml::Value,
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, String> {
        toml::from_str::<ExperimentConfig>(text).map_err(|e| e.to_string())
    }

    pub fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed, 0)
    }

    /// Parses the `[parameters]` table into the experiment's typed struct,
    /// rejecting unknown keys.
    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, String> {
        self.parameters
            .clone()
            .try_into::<T>()
            .map_err(|e| format!("invalid parameters: {e}"))
    }
}

fn default_bins() -> usize {
    64
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySpectrumParams {
    pub m: usize,
    pub n: usize,
    pub beta1: f64,
    pub eta: f64,
    pub noise_d: f64,
    pub sigma0: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub record_every: usize,
    #[serde(default = "default_one")]
    pub replicas: usize,
    /// "fp_oracle" (default) or "paper".
    #[serde(default)]
    pub exponent_convention: Option<String>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceParams {
    pub n_assets: usize,
    pub input_spectrum: Vec<f64>,
    pub data_diffusion: f64,
    pub data_dt: f64,
    pub n_pairs: usize,
    pub eta: f64,
    pub noise_d: f64,
    pub burn_in: usize,
    pub collect: usize,
    pub snapshot_every: usize,
    pub bulk_quantile: f64,
    pub stationarity_tol: f64,
    pub k_values: Vec<f64>,
    #[serde(default)]
    pub anisotropic_delta: Option<Vec<f64>>,
    pub replicas: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxScenarioParams {
    pub tau_c: f64,
    pub tau_d: f64,
    pub tau_w: f64,
    pub assessment: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropicParams {
    pub gamma: f64,
    /// Row-major covariance entries, `n_assets x n_assets`.
    pub covariance: Vec<f64>,
    pub n_assets: usize,
    pub pattern: Vec<f64>,
    pub scales: Vec<f64>,
    #[serde(default)]
    pub tax: Option<TaxScenarioParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KestenCliParams {
    pub m_hat: f64,
    pub sigma2: f64,
    #[serde(default)]
    pub additive_b: f64,
    /// "sde" (default) or "discrete".
    #[serde(default)]
    pub variant: Option<String>,
    pub dt: f64,
    pub steps: usize,
    pub burn_in: usize,
    #[serde(default = "default_one")]
    pub n_paths: usize,
    #[serde(default = "default_one")]
    pub record_every: usize,
    pub hill_k: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BouchaudMezardParams {
    pub n_agents: usize,
    pub coupling_j: f64,
    pub noise_mean: f64,
    pub noise_var: f64,
    pub dt: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub record_every: usize,
    pub hill_k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicityParams {
    pub x0: f64,
    pub log_drift: f64,
    pub diffusion_d: f64,
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTransformParams {
    pub x0: f64,
    pub q: f64,
    pub sigma_xi: f64,
    pub n_samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultDbmCliParams {
    pub a: f64,
    pub b: f64,
    pub lambda0: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub replicas: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KroneckerCheckParams {
    pub rows: usize,
    pub cols: usize,
    pub t_samples: usize,
    /// Input standard deviations per column coordinate.
    pub input_scales: Vec<f64>,
    /// Residual standard deviations per row coordinate.
    pub residual_scales: Vec<f64>,
}
