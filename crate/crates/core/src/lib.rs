//! Monte Carlo laboratory for the spectral dynamics of allocation matrices.
//!
//! The crate simulates noisy gradient training of weight matrices, the
//! associated singular-value and eigenvalue dynamics, scalar wealth
//! projections (Kesten processes, exchange-coupled multiplicative growth),
//! and runs isotropic/anisotropic perturbation experiments on the resulting
//! spectra. Everything is seeded and deterministic, including under
//! parallel execution.

pub mod error;
pub mod linalg;
pub mod numeric;
pub mod perturb;
pub mod process;
pub mod rng;
pub mod spectral;
pub mod stationary;
pub mod trainer;
pub mod wealth;

pub use error::{Error, Result};
pub use linalg::{Matrix, SvdResult};
pub use rng::SeedSpec;
