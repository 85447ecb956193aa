//! Principal angles between subspaces.

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};

/// Principal angles (radians, ascending) between the column spans of two
/// orthonormal bases of equal dimension.
///
/// Cosines are the singular values of `A^T B`. Bitwise-identical bases short
/// circuit to exact zeros.
pub fn principal_angles(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(
            "subspace bases must have equal shape".into(),
        ));
    }
    if a == b {
        return Ok(vec![0.0; a.cols()]);
    }
    let product = a.transpose().matmul(b);
    let s = svd(&product)?;
    let mut angles: Vec<f64> = s
        .sigma
        .iter()
        .map(|c| c.clamp(-1.0, 1.0).acos())
        .collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(angles)
}
