//! Sparse-grid quasi-interpolation of periodic functions measured in
//! weighted Wiener norms.
//!
//! Functions live in [`SpectralFunction`] as sparse Fourier coefficient maps
//! with a certified tail. Quasi-interpolation operators act on them through
//! the aliasing identity, so every operator in the crate is exact up to
//! floating point on the resolved spectrum.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod kernels;
pub mod majorant;
pub mod norms;
pub mod params;
pub mod quasi_interp;
pub mod rates;
pub mod sparse_grid;
pub mod spectral;

pub use error::{Error, Result};
pub use kernels::{builtin_scheme, builtin_schemes, KernelFamily, QuasiInterpScheme};
pub use norms::{wiener_norm, NormParams, NormVariant};
pub use params::{sigma, Anisotropy, Exponent, Smoothness};
pub use quasi_interp::{apply_p, apply_q, apply_q_direct};
pub use rates::{theoretical_rate, ExperimentConfig, RateSpec, Target};
pub use sparse_grid::SparseIndexSet;
pub use spectral::{CoefficientRule, FreqIndex, Level, SpectralFunction, TrigPolynomial, Turn};
