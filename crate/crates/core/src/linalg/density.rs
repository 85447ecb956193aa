//! Marchenko-Pastur reference density for sample covariance spectra.

use crate::error::{Error, Result};
use crate::numeric::simpson;

/// Marchenko-Pastur density at `lambda` for aspect ratio `ratio_q` in (0, 1]
/// and entry variance `variance`. Zero outside the support
/// `variance * (1 -+ sqrt(q))^2`.
pub fn mp_density(lambda: f64, ratio_q: f64, variance: f64) -> Result<f64> {
    check_mp_params(ratio_q, variance)?;
    let (lo, hi) = mp_support(ratio_q, variance);
    if lambda <= lo || lambda >= hi {
        return Ok(0.0);
    }
    Ok(((hi - lambda) * (lambda - lo)).sqrt()
        / (2.0 * std::f64::consts::PI * ratio_q * variance * lambda))
}

/// Support edges `variance * (1 -+ sqrt(q))^2`.
pub fn mp_support(ratio_q: f64, variance: f64) -> (f64, f64) {
    let s = ratio_q.sqrt();
    (variance * (1.0 - s) * (1.0 - s), variance * (1.0 + s) * (1.0 + s))
}

/// Marchenko-Pastur CDF, evaluated by quadrature after the substitution
/// `lambda = c + r sin(theta)`, which removes the square-root endpoint
/// singularities (the integrand becomes smooth on the whole support).
pub fn mp_cdf(lambda: f64, ratio_q: f64, variance: f64) -> Result<f64> {
    check_mp_params(ratio_q, variance)?;
    let (lo, hi) = mp_support(ratio_q, variance);
    if lambda <= lo {
        return Ok(0.0);
    }
    if lambda >= hi {
        return Ok(1.0);
    }
    let c = 0.5 * (hi + lo);
    let r = 0.5 * (hi - lo);
    let theta_max = ((lambda - c) / r).clamp(-1.0, 1.0).asin();
    let integrand = |theta: f64| {
        let lam = c + r * theta.sin();
        let cos = theta.cos();
        r * r * cos * cos / (2.0 * std::f64::consts::PI * ratio_q * variance * lam)
    };
    Ok(simpson(
        integrand,
        -std::f64::consts::FRAC_PI_2,
        theta_max,
        4000,
    ))
}

fn check_mp_params(ratio_q: f64, variance: f64) -> Result<()> {
    if !(ratio_q > 0.0 && ratio_q <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ratio_q must lie in (0, 1], got {ratio_q} (transpose to the tall convention)"
        )));
    }
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter("variance must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_outside_support() {
        let (lo, hi) = mp_support(0.25, 1.0);
        assert_eq!(mp_density(lo - 1e-6, 0.25, 1.0).unwrap(), 0.0);
        assert_eq!(mp_density(hi + 1e-6, 0.25, 1.0).unwrap(), 0.0);
        assert!(mp_density(1.0, 0.25, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn square_case_closed_form_at_two() {
        // q = 1, variance = 1: density(2) = 1 / (2 pi)
        let v = mp_density(2.0, 1.0, 1.0).unwrap();
        let expected = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn integrates_to_one() {
        for &(q, var) in &[(0.25, 1.0), (0.5, 2.0), (1.0, 1.0), (0.9, 0.5)] {
            let (_, hi) = mp_support(q, var);
            let total = mp_cdf(hi, q, var).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "q={q} var={var}: {total}");
        }
    }

    #[test]
    fn rejects_wide_ratio() {
        assert!(mp_density(1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn cdf_monotone() {
        let mut prev = 0.0;
        for i in 0..=20 {
            let lam = 0.1 + 2.2 * i as f64 / 20.0;
            let c = mp_cdf(lam, 0.25, 1.0).unwrap();
            assert!(c + 1e-12 >= prev);
            prev = c;
        }
    }
}
