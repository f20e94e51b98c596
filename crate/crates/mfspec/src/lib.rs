//! Multifractal analysis with wavelet leaders.
//!
//! The crate covers the full pipeline: orthonormal wavelet transforms,
//! wavelet leaders, classical structure functions and Legendre spectra, the
//! generalized (lifted) formalism that can recover nonconcave spectra, and
//! synthetic processes with known spectra for validation.
//!
//! Scale convention: a scale index `j` grows towards fine scales and scale
//! `j` of a d-dimensional field holds about `2^j` coefficients per axis, so
//! `j = 0` is the whole domain. A signal of `2^n` samples analysed with a
//! DWT has its finest detail level at `j = n - 1`.

pub mod classic;
pub mod error;
pub mod gmf;
pub mod harness;
pub mod leaders;
pub mod legendre;
pub mod regression;
pub mod synth;
pub mod transform;

mod logsum;

pub use error::{Error, Result};
