//! Direct integrators for the singular-value SDE with its three-force
//! decomposition, and for multiplicative Dyson Brownian motion.

use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Ordered singular-value coordinate of an `m x n` matrix.
#[derive(Debug, Clone)]
pub struct SingularState {
    /// Strictly decreasing, positive; length `min(m, n)`.
    pub sigma: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

impl SingularState {
    pub fn new(sigma: Vec<f64>, m: usize, n: usize) -> Result<Self> {
        if m < n || n < 1 {
            return Err(Error::InvalidParameter(
                "singular state requires m >= n >= 1 (transpose to the tall convention)".into(),
            ));
        }
        if sigma.len() != n.min(m) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} singular values, got {}",
                n.min(m),
                sigma.len()
            )));
        }
        if !sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidParameter(
                "singular values must be positive and finite".into(),
            ));
        }
        if !sigma.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "singular values must be strictly decreasing".into(),
            ));
        }
        Ok(Self { sigma, m, n })
    }

    pub fn p(&self) -> usize {
        self.sigma.len()
    }
}

/// Sign of the pairwise interaction term.
///
/// The interaction is described as a repulsion that keeps loadings apart,
/// while the printed evolution equation carries a minus sign in front of the
/// sum; both variants are implementable, so the sign is explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepulsionSign {
    /// `+1`: coincident singular values repel (default).
    Repulsive,
    /// `-1`: the literal printed sign.
    Attractive,
}

impl RepulsionSign {
    pub fn factor(self) -> f64 {
        match self {
            RepulsionSign::Repulsive => 1.0,
            RepulsionSign::Attractive => -1.0,
        }
    }
}

/// Additive decomposition of the singular-value drift.
#[derive(Debug, Clone, Serialize)]
pub struct ForceDecomposition {
    /// `-eta * projected_grad_k`: capital chasing the return signal.
    pub signal: Vec<f64>,
    /// `eta D (m - n + 1) / (2 sigma_k)`: keeps loadings away from zero.
    pub survival: Vec<f64>,
    /// Pairwise interaction `sign * eta D sum_j sigma_k / (sigma_k^2 - sigma_j^2)`.
    pub repulsion: Vec<f64>,
    /// `signal + survival + repulsion`, elementwise.
    pub total_drift: Vec<f64>,
    /// Number of pair denominators clamped by the collision regularization.
    pub clamp_events: usize,
}

impl ForceDecomposition {
    /// CSV serialization: `k,signal,survival,repulsion`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,signal,survival,repulsion")?;
        for k in 0..self.signal.len() {
            writeln!(
                w,
                "{k},{},{},{}",
                self.signal[k], self.survival[k], self.repulsion[k]
            )?;
        }
        Ok(())
    }
}

const COLLISION_EPS: f64 = 1e-8;

/// Evaluates the three drift forces at a state.
///
/// Pair denominators `sigma_k^2 - sigma_j^2` are clamped in magnitude below
/// `1e-8 (sigma_k^2 + sigma_j^2)` with sign preserved, and each unordered
/// pair shares one denominator so the algebraic pair identities hold exactly.
pub fn sv_forces(
    state: &SingularState,
    projected_grad: &[f64],
    eta: f64,
    noise_d: f64,
    repulsion_sign: RepulsionSign,
) -> Result<ForceDecomposition> {
    let p = state.p();
    if projected_grad.len() != p {
        return Err(Error::DimensionMismatch(
            "projected gradient length != p".into(),
        ));
    }
    let sigma = &state.sigma;
    let aspect = state.m as f64 - state.n as f64 + 1.0;
    let ed = eta * noise_d;

    let signal: Vec<f64> = projected_grad.iter().map(|g| -eta * g).collect();
    let survival: Vec<f64> = sigma.iter().map(|s| ed * aspect / (2.0 * s)).collect();

    let mut repulsion = vec![0.0; p];
    let mut clamp_events = 0usize;
    let sign = repulsion_sign.factor();
    for k in 0..p {
        for j in k + 1..p {
            let (sk, sj) = (sigma[k], sigma[j]);
            let mut denom = sk * sk - sj * sj;
            let eps = COLLISION_EPS * (sk * sk + sj * sj);
            if denom.abs() < eps {
                denom = if denom < 0.0 { -eps } else { eps };
                clamp_events += 1;
            }
            repulsion[k] += sign * ed * sk / denom;
            repulsion[j] += sign * ed * sj / (-denom);
        }
    }

    let total_drift: Vec<f64> = (0..p)
        .map(|k| signal[k] + survival[k] + repulsion[k])
        .collect();
    Ok(ForceDecomposition {
        signal,
        survival,
        repulsion,
        total_drift,
        clamp_events,
    })
}

/// Recorded singular-value SDE trajectory plus integrator event counters.
#[derive(Debug, Clone)]
pub struct SvSdeTrajectory {
    /// `(step, sigma)` snapshots; step 0 included.
    pub states: Vec<(usize, Vec<f64>)>,
    pub reflections: usize,
    pub sort_events: usize,
    pub clamp_events: usize,
    /// Set when more than 1% of steps reflected at zero (dt too large).
    pub reflection_warning: bool,
}

impl SvSdeTrajectory {
    /// CSV serialization: `step,index,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,index,value")?;
        for (step, sigma) in &self.states {
            for (i, v) in sigma.iter().enumerate() {
                writeln!(w, "{step},{i},{v}")?;
            }
        }
        Ok(())
    }
}

/// Euler-Maruyama integration of the singular-value SDE with the linear
/// restoring signal `-(beta1/2) sigma_k`.
///
/// Noise per coordinate has standard deviation `sqrt(2 eta noise_d dt)`;
/// ordering is re-imposed by sorting after each step and sign crossings are
/// reflected, with both events counted.
#[allow(clippy::too_many_arguments)]
pub fn integrate_sv_sde(
    state0: &SingularState,
    beta1: f64,
    eta: f64,
    noise_d: f64,
    repulsion_sign: RepulsionSign,
    dt: f64,
    steps: usize,
    record_every: usize,
    seed: SeedSpec,
) -> Result<SvSdeTrajectory> {
    if !(beta1 >= 0.0) || !(eta > 0.0) || !(noise_d >= 0.0) || !(dt > 0.0) || record_every == 0 {
        return Err(Error::InvalidParameter(
            "integrate_sv_sde requires beta1 >= 0, eta > 0, noise_d >= 0, dt > 0".into(),
        ));
    }
    // survival kick must stay well below the smallest coordinate
    let min_sigma = state0.sigma.last().copied().unwrap();
    let aspect = state0.m as f64 - state0.n as f64 + 1.0;
    let survival_kick = eta * noise_d * aspect.abs() / (2.0 * min_sigma) * dt;
    if survival_kick >= 0.1 * min_sigma {
        return Err(Error::InvalidParameter(format!(
            "dt too large: survival term * dt = {survival_kick:.3e} vs 0.1 * min sigma = {:.3e}",
            0.1 * min_sigma
        )));
    }

    let mut state = state0.clone();
    let p = state.p();
    let mut rng = seed.rng();
    let amp = (2.0 * eta * noise_d * dt).sqrt();
    let mut states = vec![(0usize, state.sigma.clone())];
    let mut reflections = 0usize;
    let mut sort_events = 0usize;
    let mut clamp_events = 0usize;
    let mut grad = vec![0.0; p];

    for step in 0..steps {
        for (g, s) in grad.iter_mut().zip(&state.sigma) {
            *g = beta1 * s / (2.0 * eta);
        }
        let forces = sv_forces(&state, &grad, eta, noise_d, repulsion_sign)?;
        clamp_events += forces.clamp_events;
        for k in 0..p {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let mut s = state.sigma[k] + forces.total_drift[k] * dt + amp * noise;
            if s <= 0.0 {
                s = s.abs().max(f64::MIN_POSITIVE);
                reflections += 1;
            }
            state.sigma[k] = s;
        }
        if !state.sigma.windows(2).all(|w| w[0] >= w[1]) {
            state
                .sigma
                .sort_by(|a, b| b.partial_cmp(a).unwrap());
            sort_events += 1;
        }
        if (step + 1) % record_every == 0 || step + 1 == steps {
            states.push((step + 1, state.sigma.clone()));
        }
    }

    let reflection_warning = reflections as f64 > 0.01 * (steps * p) as f64;
    Ok(SvSdeTrajectory {
        states,
        reflections,
        sort_events,
        clamp_events,
        reflection_warning,
    })
}

/// Parameters of multiplicative Dyson Brownian motion: log-drift `a`,
/// log-variance rate `b`, particle count `n_particles`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MultDbmParams {
    pub a: f64,
    pub b: f64,
    pub n_particles: usize,
}

impl MultDbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 1 {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        if !(self.b >= 0.0) {
            return Err(Error::InvalidParameter("b must be non-negative".into()));
        }
        Ok(())
    }
}

/// Recorded eigenvalue trajectory of the multiplicative Dyson BM.
#[derive(Debug, Clone)]
pub struct MultDbmTrajectory {
    /// `(step, lambda)` snapshots; step 0 included.
    pub states: Vec<(usize, Vec<f64>)>,
    pub clamp_events: usize,
}

impl MultDbmTrajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.states.last().unwrap().1
    }
}

/// Integrates `d lambda_i = (a/2) lambda_i dt
/// + (b/N) sum_j lambda_i lambda_j / (lambda_i - lambda_j) dt
/// + sqrt(b/N) lambda_i dB_i` in log coordinates.
///
/// Every term of the equation is proportional to `lambda_i`, so the Ito-
/// corrected log map integrates drift and noise exactly and positivity holds
/// by construction; only the interaction term is evaluated pointwise. Each
/// unordered pair shares one (clamped) denominator, which keeps the exact
/// pairwise cancellation `l_i l_j/(l_i - l_j) + l_j l_i/(l_j - l_i) = 0`.
pub fn integrate_mult_dbm(
    lambda0: &[f64],
    params: &MultDbmParams,
    dt: f64,
    steps: usize,
    record_every: usize,
    seed: SeedSpec,
) -> Result<MultDbmTrajectory> {
    params.validate()?;
    if lambda0.len() != params.n_particles {
        return Err(Error::DimensionMismatch(format!(
            "lambda0 has {} entries but n_particles = {}",
            lambda0.len(),
            params.n_particles
        )));
    }
    if !lambda0.iter().all(|l| l.is_finite() && *l > 0.0) {
        return Err(Error::InvalidParameter(
            "initial eigenvalues must be positive".into(),
        ));
    }
    if !(dt > 0.0) || record_every == 0 {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }

    let n = params.n_particles;
    let nf = n as f64;
    let mut rng = seed.rng();
    let mut lambda = lambda0.to_vec();
    let mut log_lambda: Vec<f64> = lambda.iter().map(|l| l.ln()).collect();
    let ito_drift = params.a / 2.0 - params.b / (2.0 * nf);
    let amp = (params.b / nf * dt).sqrt();
    // The denominator floor is tied to the per-step noise scale: a clamped
    // pair then receives a log-kick of at most one noise standard deviation
    // per step, so crossings relax instead of blowing up the exponent.
    let eps_rel = (0.5 * (params.b * dt / nf).sqrt()).max(COLLISION_EPS);
    let mut rep = vec![0.0; n];
    let mut states = vec![(0usize, lambda.clone())];
    let mut clamp_events = 0usize;

    for step in 0..steps {
        rep.iter_mut().for_each(|r| *r = 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let (li, lj) = (lambda[i], lambda[j]);
                let mut denom = li - lj;
                let eps = eps_rel * (li + lj);
                if denom.abs() < eps {
                    denom = if denom < 0.0 { -eps } else { eps };
                    clamp_events += 1;
                }
                rep[i] += params.b / nf * lj / denom;
                rep[j] += params.b / nf * li / (-denom);
            }
        }
        for i in 0..n {
            let noise: f64 = StandardNormal.sample(&mut rng);
            log_lambda[i] += (ito_drift + rep[i]) * dt + amp * noise;
            lambda[i] = log_lambda[i].exp();
        }
        if (step + 1) % record_every == 0 || step + 1 == steps {
            states.push((step + 1, lambda.clone()));
        }
    }

    Ok(MultDbmTrajectory {
        states,
        clamp_events,
    })
}

/// Predicted mean eigenvalue `exp(t a / 2)` of the free log-normal spectral
/// family at time `t` (relative to a unit initial mean).
pub fn free_lognormal_mean(a: f64, t: f64) -> f64 {
    (t * a / 2.0).exp()
}
