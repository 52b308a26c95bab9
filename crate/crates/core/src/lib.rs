//! Weighted Hardy and Bergman kernels on discs, annuli and their products.
//!
//! The crate builds truncated reproducing kernels from weighted Gram
//! matrices, solves the minimal-norm extension problems behind the jet
//! versions of the kernels, and evaluates Saitoh-type inequalities between
//! boundary (Hardy) kernels and interior (Bergman) kernels.
//!
//! Module layout follows the data flow:
//!
//! * [`integration`] – Gauss–Legendre, trapezoid and tensor quadrature rules.
//! * [`geometry`] – domains, Green functions, fluxes and exhaustions.
//! * [`weights`] – the weight fields built from `φ`, `ψ`, `c` and `γ`.
//! * [`kernels`] – bases, Gram matrices, orthonormalization and jets.
//! * [`products`] – product spaces and the kernel decomposition checks.
//! * [`saitoh`] – the inequalities themselves, sweeps and strictness probes.

pub mod error;
pub mod geometry;
pub mod integration;
pub mod kernels;
pub mod products;
pub mod saitoh;
pub mod weights;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const TAU: f64 = std::f64::consts::TAU;
