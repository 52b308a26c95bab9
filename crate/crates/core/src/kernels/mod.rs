//! Truncated reproducing kernels.
//!
//! A space is spanned by a finite [`BasisSpec`]; a quadrature rule and a
//! weight turn it into a [`GramMatrix`], whose eigendecomposition yields an
//! [`OrthonormalBasis`] and with it the kernel. The jet problems
//! (minimal norm under prescribed Taylor coefficients) live in [`jets`].

mod basis;
mod gram;
pub mod jets;

pub use basis::{BasisSpec, FactorBasis};
pub use gram::{assemble_gram, kernel_eval, orthonormalize, GramMatrix, OrthonormalBasis, RANK_TOLERANCE};
pub use jets::{constrained_min_norm, order_sorted_onb, ExtremalResult, JetIdeal};
