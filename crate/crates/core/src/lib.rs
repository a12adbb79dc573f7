//! Pseudo-spectral Fourier-Galerkin toolkit for viscous, non-resistive MHD.
//!
//! * [`grid`], [`field`], [`fft`]: band-limited fields on a periodic box,
//!   Fourier multipliers, truncation, Leray projection, Sobolev norms.
//! * [`nonlinear`]: alias-free advection, fractional commutators and the
//!   numerical estimate probes.
//! * [`mhd`]: the truncated MHD system and its diagnostics.
//! * [`stokes`]: the reduced model with a Stokes-slaved velocity.
//! * [`counterexample`]: the continuum Fourier-space study of the `s = 1`,
//!   `n = 2` commutator inequality.
//! * [`snapshot`]: the `SPECF01` binary snapshot format.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod mhd;
pub mod nonlinear;
pub mod sampler;
pub mod snapshot;
pub mod stokes;

pub use error::{Error, Result};
pub use field::{FractionalKind, NormKind, SpectralField, VectorField};
pub use grid::SpectralGrid;
pub use num_complex::Complex64;
