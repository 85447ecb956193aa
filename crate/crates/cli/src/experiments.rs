//! Experiment implementations: each takes its typed parameters and returns
//! machine-readable metrics plus fully rendered CSV artifacts. Artifacts are
//! kept in memory and written only after the computation succeeds, so a
//! failed run leaves no partial output.

use crate::config::*;
use crate::CliError;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fmt::Write as _;
use svlab_core::linalg::{sample_gaussian_matrix, Matrix};
use svlab_core::numeric::{ls_slope, mean, standard_error};
use svlab_core::perturb::{
    distortion_scaling_experiment, run_invariance_experiment, tax_to_perturbation,
    weight_distortion, InvariancePipeline, PerturbationSpec, TaxScenario,
};
use svlab_core::process::{q_transform_sample, sample_skewness, QTransformSpec, TrajectorySet};
use svlab_core::rng::SeedSpec;
use svlab_core::spectral::{
    free_lognormal_mean, integrate_mult_dbm, integrate_sv_sde, MultDbmParams, RepulsionSign,
    SingularState,
};
use svlab_core::stationary::{ks_distance, DensityEstimate, ExponentConvention, StationaryModel};
use svlab_core::trainer::gradient_covariance_check;
use svlab_core::wealth::{
    ergodicity_gap, simulate_bouchaud_mezard, simulate_gbm, simulate_kesten_discrete,
    simulate_kesten_sde, BmPopulation, KestenParams,
};

pub type Artifacts = Vec<(String, String)>;

fn numerical(e: svlab_core::Error) -> CliError {
    use svlab_core::Error as E;
    match e {
        E::Diverged { .. } | E::NotStationary { .. } | E::NonFinite(_) | E::Degenerate(_) => {
            CliError::Numerical(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn histogram_csv(samples: &[f64], bins: usize) -> Result<(String, Value), CliError> {
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let est = DensityEstimate::from_samples(samples, lo, hi, bins).map_err(numerical)?;
    let mut out = Vec::new();
    est.write_csv(&mut out).map_err(|e| CliError::Io(e.to_string()))?;
    Ok((
        String::from_utf8(out).expect("csv is utf-8"),
        json!({"bins": bins, "lo": lo, "hi": hi, "sample_count": est.sample_count}),
    ))
}

pub fn run_stationary_spectrum(
    p: &StationarySpectrumParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    let model = StationaryModel {
        m: p.m,
        n: p.n,
        beta1: p.beta1,
        eta: p.eta,
        noise_d: p.noise_d,
    };
    let convention = match p.exponent_convention.as_deref() {
        None | Some("fp_oracle") => ExponentConvention::FpOracle,
        Some("paper") => ExponentConvention::Paper,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown exponent_convention '{other}' (use \"paper\" or \"fp_oracle\")"
            )))
        }
    };
    let state0 = SingularState::new(p.sigma0.clone(), p.m, p.n).map_err(|e| CliError::Config(e.to_string()))?;

    let runs: Vec<_> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            integrate_sv_sde(
                &state0,
                p.beta1,
                p.eta,
                p.noise_d,
                RepulsionSign::Repulsive,
                p.dt,
                p.burn_in + p.steps,
                p.record_every,
                seed.substream(r as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerical)?;

    let mut samples_csv = String::from("replica,step,index,value\n");
    let mut samples = Vec::new();
    let mut reflections = 0usize;
    let mut sort_events = 0usize;
    let mut clamp_events = 0usize;
    for (r, traj) in runs.iter().enumerate() {
        reflections += traj.reflections;
        sort_events += traj.sort_events;
        clamp_events += traj.clamp_events;
        for (step, sigma) in &traj.states {
            if *step <= p.burn_in {
                continue;
            }
            for (i, v) in sigma.iter().enumerate() {
                let _ = writeln!(samples_csv, "{r},{step},{i},{v}");
                samples.push(*v);
            }
        }
    }
    if samples.len() < 100 {
        return Err(CliError::Config(
            "too few post-burn-in samples; increase steps or replicas".into(),
        ));
    }
    let density = model.density(convention).map_err(|e| CliError::Config(e.to_string()))?;
    let ks = ks_distance(&samples, |x| density.cdf(x)).map_err(numerical)?;
    let (hist_csv, hist_meta) = histogram_csv(&samples, p.bins)?;

    let metrics = json!({
        "ks": ks,
        "sample_count": samples.len(),
        "mode_predicted": model.mode(convention),
        "reflections": reflections,
        "sort_events": sort_events,
        "clamp_events": clamp_events,
        "histogram": hist_meta,
    });
    Ok((
        metrics,
        vec![
            ("samples.csv".into(), samples_csv),
            ("histogram.csv".into(), hist_csv),
        ],
    ))
}

pub fn run_invariance(
    p: &InvarianceParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    let pipeline = InvariancePipeline {
        n_assets: p.n_assets,
        input_spectrum: p.input_spectrum.clone(),
        data_diffusion: p.data_diffusion,
        data_dt: p.data_dt,
        n_pairs: p.n_pairs,
        eta: p.eta,
        noise_d: p.noise_d,
        burn_in: p.burn_in,
        collect: p.collect,
        snapshot_every: p.snapshot_every,
        bulk_quantile: p.bulk_quantile,
        stationarity_tol: p.stationarity_tol,
    };
    let mut perturbations: Vec<PerturbationSpec> = p
        .k_values
        .iter()
        .map(|&k| PerturbationSpec::Isotropic { k })
        .collect();
    let mut labels: Vec<String> = p.k_values.iter().map(|k| format!("k{k}")).collect();
    if let Some(delta) = &p.anisotropic_delta {
        perturbations.push(PerturbationSpec::Anisotropic {
            delta: delta.clone(),
        });
        labels.push("aniso".into());
    }
    let outcome = run_invariance_experiment(&pipeline, &perturbations, p.replicas, seed)
        .map_err(numerical)?;

    let mut artifacts = Vec::new();
    let mut spectrum_csv = String::from("index,value\n");
    for (i, v) in outcome.baseline_spectrum.iter().enumerate() {
        let _ = writeln!(spectrum_csv, "{i},{v}");
    }
    artifacts.push(("spectra_baseline.csv".into(), spectrum_csv));

    let mut per_perturbation = Vec::new();
    for (summary, label) in outcome.summaries.iter().zip(&labels) {
        let mut csv = String::from("index,value\n");
        for (i, v) in summary.example_spectrum.iter().enumerate() {
            let _ = writeln!(csv, "{i},{v}");
        }
        artifacts.push((format!("spectra_{label}.csv"), csv));
        per_perturbation.push(json!({
            "label": label,
            "perturbation": summary.perturbation,
            "ks_normalized": summary.mean_of(|r| r.ks_normalized),
            "ks_normalized_se": summary.stderr_of(|r| r.ks_normalized),
            "principal_angle_max": summary.mean_of(|r| r.principal_angle_max),
            "principal_angle_max_se": summary.stderr_of(|r| r.principal_angle_max),
            "r_eff_delta_sum": summary.mean_of(|r| r.r_eff_delta_sum),
            "r_eff_delta_participation": summary.mean_of(|r| r.r_eff_delta_participation),
            "scale_ratio": summary.mean_of(|r| r.scale_ratio),
            "tail_exponent_delta": summary.mean_of(|r| r.tail_exponent_delta),
            "replicas": summary.reports.len(),
            "reports": summary.reports,
        }));
    }
    Ok((json!({ "perturbations": per_perturbation }), artifacts))
}

pub fn run_anisotropic(p: &AnisotropicParams) -> Result<(Value, Artifacts), CliError> {
    let v = Matrix::from_rows(p.n_assets, p.n_assets, p.covariance.clone())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let base = weight_distortion(p.gamma, &v, &p.pattern).map_err(|e| CliError::Config(e.to_string()))?;
    let scaling = distortion_scaling_experiment(&p.pattern, &p.scales, p.gamma, &v)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = String::from("scale,var_delta,magnitude\n");
    for (c, rep) in scaling.scales.iter().zip(&scaling.reports) {
        let _ = writeln!(csv, "{c},{},{}", rep.var_delta, rep.magnitude);
    }
    let mut delta_csv = String::from("asset,delta_w\n");
    for (i, d) in base.delta_w.iter().enumerate() {
        let _ = writeln!(delta_csv, "{i},{d}");
    }

    let tax = match &p.tax {
        None => Value::Null,
        Some(t) => {
            let scenario = TaxScenario {
                tau_c: t.tau_c,
                tau_d: t.tau_d,
                tau_w: t.tau_w,
                assessment: t.assessment.clone(),
            };
            let mapped = tax_to_perturbation(&scenario).map_err(|e| CliError::Config(e.to_string()))?;
            serde_json::to_value(&mapped).expect("serializable")
        }
    };

    let metrics = json!({
        "slope": scaling.slope,
        "base_magnitude": base.magnitude,
        "base_var_delta": base.var_delta,
        "tax": tax,
    });
    Ok((
        metrics,
        vec![
            ("distortion.csv".into(), csv),
            ("delta_w.csv".into(), delta_csv),
        ],
    ))
}

pub fn run_kesten(p: &KestenCliParams, seed: SeedSpec) -> Result<(Value, Artifacts), CliError> {
    let params = KestenParams {
        m_hat: p.m_hat,
        sigma2: p.sigma2,
        additive_b: p.additive_b,
    };
    match p.variant.as_deref() {
        None | Some("sde") => {
            let out = simulate_kesten_sde(
                &params,
                p.dt,
                p.steps,
                p.burn_in,
                p.n_paths,
                p.record_every,
                p.hill_k,
                seed,
            )
            .map_err(numerical)?;
            let logs: Vec<f64> = out.samples.iter().map(|x| x.ln()).collect();
            let (hist_csv, hist_meta) = histogram_csv(&logs, p.bins)?;
            let metrics = json!({
                "hill_mu": out.fit.alpha_hat,
                "hill_stderr": out.fit.stderr,
                "hill_k": out.fit.k_tail,
                "predicted_mu": out.predicted_mu,
                "sample_count": out.samples.len(),
                "reflections": out.reflections,
                "reflection_warning": out.reflection_warning,
                "log_histogram": hist_meta,
            });
            Ok((metrics, vec![("log_histogram.csv".into(), hist_csv)]))
        }
        Some("discrete") => {
            let out = simulate_kesten_discrete(&params, p.dt, p.steps, p.burn_in, seed)
                .map_err(numerical)?;
            let fit = if out.degenerate {
                None
            } else {
                let thinned: Vec<f64> =
                    out.samples.iter().step_by(p.record_every.max(1)).cloned().collect();
                svlab_core::stationary::hill_estimator(&thinned, p.hill_k).ok()
            };
            let logs: Vec<f64> = out
                .samples
                .iter()
                .filter(|x| **x > 0.0)
                .map(|x| x.ln())
                .collect();
            let (hist_csv, hist_meta) = histogram_csv(&logs, p.bins)?;
            let metrics = json!({
                "degenerate": out.degenerate,
                "hill_mu": fit.map(|f| f.alpha_hat),
                "predicted_mu": params.predicted_mu(),
                "reflections": out.reflections,
                "log_histogram": hist_meta,
            });
            Ok((metrics, vec![("log_histogram.csv".into(), hist_csv)]))
        }
        Some(other) => Err(CliError::Config(format!(
            "unknown kesten variant '{other}' (use \"sde\" or \"discrete\")"
        ))),
    }
}

pub fn run_bouchaud_mezard(
    p: &BouchaudMezardParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    let pop = BmPopulation::uniform(p.n_agents, p.coupling_j, p.noise_mean, p.noise_var);
    let out = simulate_bouchaud_mezard(
        &pop,
        p.dt,
        p.steps,
        p.burn_in,
        p.record_every,
        p.hill_k,
        seed,
    )
    .map_err(numerical)?;

    let mut max_csv = String::from("step,max_share\n");
    for (step, v) in &out.max_share_series {
        let _ = writeln!(max_csv, "{step},{v}");
    }
    let mut total_csv = String::from("step,total_wealth\n");
    for (step, v) in &out.total_wealth_series {
        let _ = writeln!(total_csv, "{step},{v}");
    }
    let mut shares_csv = String::from("agent,share\n");
    let final_shares = &out.share_snapshots.last().expect("snapshots").1;
    for (i, s) in final_shares.iter().enumerate() {
        let _ = writeln!(shares_csv, "{i},{s}");
    }

    let metrics = json!({
        "sup_max_share": out.sup_max_share,
        "hill_alpha": out.fit.map(|f| f.alpha_hat),
        "reflections": out.reflections,
    });
    Ok((
        metrics,
        vec![
            ("max_share.csv".into(), max_csv),
            ("total_wealth.csv".into(), total_csv),
            ("final_shares.csv".into(), shares_csv),
        ],
    ))
}

pub fn run_ergodicity(
    p: &ErgodicityParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    let traj = simulate_gbm(
        p.x0,
        p.log_drift,
        p.diffusion_d,
        p.dt,
        p.steps,
        p.n_paths,
        seed,
    )
    .map_err(numerical)?;
    let rep = ergodicity_gap(&traj).map_err(numerical)?;

    let steps = traj.steps();
    let times: Vec<f64> = (0..steps).map(|i| i as f64 * traj.dt).collect();
    let mut mean_csv = String::from("step,log_ensemble_mean\n");
    for i in 0..steps {
        let m = traj.paths.iter().map(|path| path[i]).sum::<f64>() / traj.paths.len() as f64;
        let _ = writeln!(mean_csv, "{i},{}", m.ln());
    }
    let mut slopes_csv = String::from("path,log_slope\n");
    for (i, path) in traj.paths.iter().enumerate() {
        let logs: Vec<f64> = path.iter().map(|x| x.ln()).collect();
        let _ = writeln!(slopes_csv, "{i},{}", ls_slope(&times, &logs));
    }

    let metrics = json!({
        "g_ens": rep.g_ens,
        "g_time": rep.g_time,
        "gap": rep.gap,
        "predicted_gap": p.diffusion_d,
    });
    Ok((
        metrics,
        vec![
            ("log_ensemble_mean.csv".into(), mean_csv),
            ("path_slopes.csv".into(), slopes_csv),
        ],
    ))
}

pub fn run_qtransform(
    p: &QTransformParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    let spec = QTransformSpec {
        x0: p.x0,
        q: p.q,
        sigma_xi: p.sigma_xi,
    };
    let sample = q_transform_sample(&spec, p.n_samples, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let log_returns: Vec<f64> = sample.values.iter().map(|x| (x / p.x0).ln()).collect();
    let skewness = sample_skewness(&log_returns).map_err(numerical)?;
    let (hist_csv, hist_meta) = histogram_csv(&log_returns, p.bins)?;

    let metrics = json!({
        "skewness": skewness,
        "predicted_skewness": -3.0 * p.q * p.sigma_xi,
        "rejections": sample.rejections,
        "rejection_warning": sample.rejection_warning,
        "log_return_histogram": hist_meta,
    });
    Ok((metrics, vec![("log_return_histogram.csv".into(), hist_csv)]))
}

pub fn run_mult_dbm(
    p: &MultDbmCliParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    let params = MultDbmParams {
        a: p.a,
        b: p.b,
        n_particles: p.lambda0.len(),
    };
    let runs: Vec<_> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            integrate_mult_dbm(
                &p.lambda0,
                &params,
                p.dt,
                p.steps,
                p.record_every,
                seed.substream(r as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerical)?;

    let mut csv = String::from("replica,step,index,value\n");
    let mut finals = Vec::with_capacity(p.replicas);
    let mut clamp_events = 0usize;
    for (r, traj) in runs.iter().enumerate() {
        clamp_events += traj.clamp_events;
        for (step, lambda) in &traj.states {
            for (i, v) in lambda.iter().enumerate() {
                let _ = writeln!(csv, "{r},{step},{i},{v}");
            }
        }
        finals.push(mean(traj.final_state()));
    }
    let measured = mean(&finals);
    let t = p.dt * p.steps as f64;
    let predicted = mean(&p.lambda0) * free_lognormal_mean(p.a, t);
    let se = if finals.len() > 1 {
        standard_error(&finals)
    } else {
        0.0
    };
    let metrics = json!({
        "mean_final": measured,
        "predicted_mean": predicted,
        "replica_se": se,
        "clamp_events": clamp_events,
        "horizon": t,
    });
    Ok((metrics, vec![("trajectories.csv".into(), csv)]))
}

pub fn run_kronecker_check(
    p: &KroneckerCheckParams,
    seed: SeedSpec,
) -> Result<(Value, Artifacts), CliError> {
    if p.rows != p.cols {
        return Err(CliError::Config(
            "the drift-regression covariance check needs rows == cols (state dimension)".into(),
        ));
    }
    if p.input_scales.len() != p.cols || p.residual_scales.len() != p.rows {
        return Err(CliError::Config(
            "input_scales / residual_scales must match cols / rows".into(),
        ));
    }
    let gx = sample_gaussian_matrix(p.t_samples, p.cols, 1.0, seed.substream(0))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let gr = sample_gaussian_matrix(p.t_samples, p.rows, 1.0, seed.substream(1))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut paths = Vec::with_capacity(p.t_samples);
    for t in 0..p.t_samples {
        let x: Vec<f64> = gx
            .row(t)
            .iter()
            .zip(&p.input_scales)
            .map(|(g, s)| g * s)
            .collect();
        let x1: Vec<f64> = gr
            .row(t)
            .iter()
            .zip(&p.residual_scales)
            .zip(&x)
            .map(|((g, s), xi)| xi + g * s)
            .collect();
        paths.push(vec![x, x1]);
    }
    let data = TrajectorySet::from_paths(1.0, paths).map_err(|e| CliError::Config(e.to_string()))?;
    let rep = gradient_covariance_check(&data, &Matrix::zeros(p.rows, p.cols))
        .map_err(numerical)?;
    let metrics = json!({
        "kronecker_fit_error": rep.kronecker_fit_error,
        "low_rank": rep.low_rank,
        "t_samples": p.t_samples,
    });
    Ok((metrics, vec![]))
}
