//! Dense matrix primitives, SVD, ensemble sampling, and reference spectral
//! densities shared by every simulation module.

mod density;
mod ensemble;
mod matrix;
mod spectrum;
mod subspace;
mod svd;

pub use density::{mp_cdf, mp_density, mp_support};
pub use ensemble::{sample_gaussian_matrix, sample_wishart_spectrum};
pub use matrix::{cholesky, inverse_spd, solve_spd, solve_with_factor, Matrix};
pub use spectrum::invert_spectrum;
pub use subspace::principal_angles;
pub use svd::{svd, SvdResult};
