//! Spectrum transforms.

use crate::error::{Error, Result};

/// Elementwise reciprocal of a positive spectrum, re-sorted descending.
///
/// This is the inversion duality between sample-covariance spectra and their
/// matrix inverses: the spectrum of `A^{-1}` is the image of the spectrum of
/// `A` under `lambda -> 1/lambda`.
pub fn invert_spectrum(spectrum: &[f64]) -> Result<Vec<f64>> {
    if spectrum.is_empty() {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if let Some(bad) = spectrum.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "spectrum entries must be positive, got {bad}"
        )));
    }
    let mut inv: Vec<f64> = spectrum.iter().map(|x| 1.0 / x).collect();
    inv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(inv)
}
