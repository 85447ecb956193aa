//! Experiment dispatch and output assembly.

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::experiments::{self, Artifacts};
use crate::CliError;
use serde_json::{json, Value};
use std::path::Path;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

/// Executes the configured experiment, returning metrics, rendered
/// artifacts, and the wall time in seconds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Value, Artifacts, f64), CliError> {
    let seed = config.seed_spec();
    let t0 = Instant::now();
    let (metrics, artifacts) = match config.experiment {
        ExperimentKind::StationarySpectrum => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_stationary_spectrum(&p, seed)?
        }
        ExperimentKind::Invariance => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_invariance(&p, seed)?
        }
        ExperimentKind::Anisotropic => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_anisotropic(&p)?
        }
        ExperimentKind::Kesten => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_kesten(&p, seed)?
        }
        ExperimentKind::BouchaudMezard => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_bouchaud_mezard(&p, seed)?
        }
        ExperimentKind::Ergodicity => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_ergodicity(&p, seed)?
        }
        ExperimentKind::Qtransform => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_qtransform(&p, seed)?
        }
        ExperimentKind::MultDbm => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_mult_dbm(&p, seed)?
        }
        ExperimentKind::KroneckerCheck => {
            let p = config.params().map_err(CliError::Config)?;
            experiments::run_kronecker_check(&p, seed)?
        }
    };
    Ok((metrics, artifacts, t0.elapsed().as_secs_f64()))
}

/// Writes the CSV artifacts and the JSON summary, returning the summary.
pub fn write_outputs(
    config: &ExperimentConfig,
    output_dir: &Path,
    metrics: Value,
    artifacts: Artifacts,
    wall_time_s: f64,
) -> Result<Value, CliError> {
    std::fs::create_dir_all(output_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", output_dir.display())))?;
    let mut names = Vec::with_capacity(artifacts.len());
    for (name, content) in &artifacts {
        let path = output_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        names.push(name.clone());
    }

    let config_echo = json!({
        "experiment": config.experiment.name(),
        "seed": config.seed,
        "parameters": toml_to_json(&config.parameters),
    });
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config": config_echo,
        "metrics": metrics,
        "artifacts": names,
        "wall_time_s": wall_time_s,
    });
    let path = output_dir.join("summary.json");
    let rendered = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&path, rendered)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(summary)
}

fn toml_to_json(value: &toml::Value) -> Value {
    match value {
        toml::Value::String(s) => Value::String(s.clone()),
        toml::Value::Integer(i) => json!(i),
        toml::Value::Float(f) => json!(f),
        toml::Value::Boolean(b) => Value::Bool(*b),
        toml::Value::Datetime(d) => Value::String(d.to_string()),
        toml::Value::Array(items) => Value::Array(items.iter().map(toml_to_json).collect()),
        toml::Value::Table(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), toml_to_json(v)))
                .collect(),
        ),
    }
}
