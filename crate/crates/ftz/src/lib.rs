//! Truncated Toeplitz operators on the Fock space of one complex variable.
//!
//! The crate samples symbols on a periodic grid over ℂ ≅ ℝ², pushes them
//! through FFT-based transforms (Fourier, Gaussian heat semigroup, spectral
//! derivatives), compresses them to truncated Toeplitz matrices by
//! Gaussian-weighted quadrature, and splits any symbol into band-limited
//! pieces g_x whose spectra live in unit boxes of the frequency lattice.
//! On top of that sit the measurement tools: operator and Schatten norms,
//! Berezin transforms, Carleson constants, Schur-test bounds, and the
//! decomposition/reconstruction pipeline with its tail estimates.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`field`] — grids, sampled symbols, and all FFT-based transforms.
//! * [`fock`] — truncated basis, kernels, Toeplitz assembly, displacement
//!   operators, operator/Schatten norms, Berezin transforms.
//! * [`partition`] — the smooth partition of unity on the frequency lattice
//!   and the band-limited symbol pieces.
//! * [`decomp`] — the decomposition T_g = Σ_x T_{g_x}, its residuals, tail
//!   estimates, the integral representation, and the Weyl conjugation check.
//! * [`bounds`] — every norm and Schatten-norm bound as a computable number.
//! * [`cli`] — config-driven experiment runner, matrix cache, CSV ingestion.

pub mod bounds;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod field;
pub mod fock;
pub mod partition;

pub use error::{Error, Result};
