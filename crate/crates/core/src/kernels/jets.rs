//! Jet ideals and the minimal-norm extension problem.
//!
//! A jet ideal is described by a finite set `L` of multi-orders at a base
//! point: a function `f` satisfies the constraint when its Taylor
//! coefficients on `L` match those of `h_0`. The jet kernel value is
//! `1 / min ‖f‖²` over such `f`, or 0 when no element of the span satisfies
//! the constraints.
//!
//! Multi-orders are compared graded first, then by the first coordinate in
//! which they differ.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::gram::{orthonormalize, GramMatrix, OrthonormalBasis};
use super::BasisSpec;
use crate::{Error, Result, C64};

/// Relative residual below which the constraints count as satisfied.
const FEASIBILITY_TOL: f64 = 1e-8;

pub fn graded_lex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

/// Every multi-order of length `dims` and total degree at most `degree`,
/// in graded-lex order.
pub fn graded_orders(dims: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, dims: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dims {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, dims, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), dims, degree, &mut out);
    out.sort_by(|a, b| graded_lex_cmp(a, b));
    out
}

/// All `α` with `α <= bound` in graded-lex order.
pub fn graded_lex_below(bound: &[u32]) -> Vec<Vec<u32>> {
    let deg: u32 = bound.iter().sum();
    graded_orders(bound.len(), deg)
        .into_iter()
        .filter(|a| graded_lex_cmp(a, bound) != Ordering::Greater)
        .collect()
}

/// All `α` with `α_j <= β̃_j` for every `j`.
pub fn box_orders(beta_tilde: &[u32]) -> Vec<Vec<u32>> {
    let deg: u32 = beta_tilde.iter().sum();
    graded_orders(beta_tilde.len(), deg)
        .into_iter()
        .filter(|a| a.iter().zip(beta_tilde).all(|(x, b)| x <= b))
        .collect()
}

/// Order of vanishing of a one-variable jet (index of the first nonzero coefficient).
pub fn jet_order(coeffs: &[C64]) -> Option<u32> {
    coeffs.iter().position(|c| c.norm() > 0.0).map(|k| k as u32)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetIdeal {
    pub base: Vec<C64>,
    pub indices: Vec<Vec<u32>>,
    /// Taylor coefficients of `h_0` on `indices`.
    pub targets: Vec<C64>,
}

impl JetIdeal {
    pub fn new(base: Vec<C64>, indices: Vec<Vec<u32>>, targets: Vec<C64>) -> Result<Self> {
        if indices.len() != targets.len() || indices.iter().any(|a| a.len() != base.len()) {
            return Err(Error::Dimension("jet indices, targets and base point disagree".into()));
        }
        Ok(Self { base, indices, targets })
    }

    /// The maximal ideal at `base` with `h_0(base) = value`.
    pub fn maximal(base: Vec<C64>, value: C64) -> Self {
        let n = base.len();
        Self { base, indices: vec![vec![0; n]], targets: vec![value] }
    }

    /// Targets from `h_0 = ∏_s h_s(x_s)`, with one Taylor jet per coordinate.
    /// Coefficients past the end of a jet are zero.
    pub fn from_product_jets(base: Vec<C64>, indices: Vec<Vec<u32>>, jets: &[Vec<C64>]) -> Result<Self> {
        if jets.len() != base.len() {
            return Err(Error::Dimension(format!("{} jets for {} coordinates", jets.len(), base.len())));
        }
        let targets = indices
            .iter()
            .map(|a| {
                a.iter()
                    .zip(jets)
                    .map(|(&k, j)| j.get(k as usize).copied().unwrap_or(C64::new(0.0, 0.0)))
                    .product()
            })
            .collect();
        Self::new(base, indices, targets)
    }

    /// The ideal on the product of the two coordinate sets whose index set is
    /// the product of the two index sets and whose `h_0` is the product.
    pub fn product(&self, other: &JetIdeal) -> JetIdeal {
        let mut base = self.base.clone();
        base.extend_from_slice(&other.base);
        let mut indices = Vec::new();
        let mut targets = Vec::new();
        for (a, ta) in self.indices.iter().zip(&self.targets) {
            for (b, tb) in other.indices.iter().zip(&other.targets) {
                let mut ab = a.clone();
                ab.extend_from_slice(b);
                indices.push(ab);
                targets.push(ta * tb);
            }
        }
        JetIdeal { base, indices, targets }
    }

    /// Same constraints at a permuted coordinate order: slot `i` of the result
    /// is slot `perm[i]` of `self`.
    pub fn permute_slots(&self, perm: &[usize]) -> JetIdeal {
        JetIdeal {
            base: perm.iter().map(|&i| self.base[i]).collect(),
            indices: self.indices.iter().map(|a| perm.iter().map(|&i| a[i]).collect()).collect(),
            targets: self.targets.clone(),
        }
    }

    /// The jet map: Taylor coefficients on `L` of each basis element.
    pub fn jet_matrix(&self, basis: &BasisSpec) -> Result<DMatrix<C64>> {
        if basis.slots() != self.base.len() {
            return Err(Error::Dimension(format!("{}-variable ideal on {} slots", self.base.len(), basis.slots())));
        }
        let mut j = DMatrix::zeros(self.indices.len(), basis.dim());
        for (r, a) in self.indices.iter().enumerate() {
            for (c, v) in basis.jet_row(&self.base, a).into_iter().enumerate() {
                j[(r, c)] = v;
            }
        }
        Ok(j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalResult {
    /// Coefficients of the minimizer in the original basis.
    #[serde(skip)]
    pub coeffs: DVector<C64>,
    pub min_norm_sq: f64,
    pub kernel_value: f64,
    pub feasible: bool,
    pub residual: f64,
}

/// `min ‖f‖²` over the span subject to the jet constraints.
pub fn constrained_min_norm(gram: &GramMatrix, ideal: &JetIdeal) -> Result<ExtremalResult> {
    let onb = orthonormalize(gram)?;
    constrained_min_norm_onb(&onb, ideal)
}

/// As [`constrained_min_norm`], reusing an orthonormal basis.
///
/// In orthonormal coordinates `f = Σ y_m e_m` the problem is
/// `min |y|²` subject to `B y = t` with `B = J C`; the pseudo-inverse from an
/// SVD of `B` gives the minimizer, and the residual decides feasibility.
pub fn constrained_min_norm_onb(onb: &OrthonormalBasis, ideal: &JetIdeal) -> Result<ExtremalResult> {
    let b = ideal.jet_matrix(&onb.basis)? * &onb.coeffs;
    let (y, r) = min_norm_solution(&b, &ideal.targets)?;
    Ok(ExtremalResult { coeffs: &onb.coeffs * y, ..r })
}

/// Minimal `|y|²` subject to `B y = t`; the returned result carries the
/// orthonormal coordinates `y` separately and leaves `coeffs` empty.
pub fn min_norm_solution(b: &DMatrix<C64>, targets: &[C64]) -> Result<(DVector<C64>, ExtremalResult)> {
    let t = DVector::from_column_slice(targets);
    let t_norm = t.norm();
    if t_norm == 0.0 {
        return Err(Error::Hypothesis("h0 lies in the ideal; the extremal problem is trivial".into()));
    }
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let y = if smax == 0.0 {
        DVector::zeros(b.ncols())
    } else {
        svd.pseudo_inverse(1e-12 * smax)
            .map_err(|e| Error::Numerical(format!("pseudo-inverse failed: {e}")))?
            * &t
    };
    let residual = (b * &y - &t).norm() / t_norm;
    let feasible = residual <= FEASIBILITY_TOL;
    let min_norm_sq = if feasible { y.norm_squared() } else { f64::INFINITY };
    let kernel_value = if feasible { 1.0 / min_norm_sq } else { 0.0 };
    let r = ExtremalResult { coeffs: DVector::zeros(0), min_norm_sq, kernel_value, feasible, residual };
    Ok((y, r))
}

/// Orthonormal basis sorted by vanishing order at `base`.
///
/// For every `α` with `|α| <= max_degree`, in graded-lex order, the element
/// of minimal norm with Taylor coefficient 1 at `α` and 0 at every earlier
/// order is found; normalized, these are orthonormal with strictly
/// triangular jets. Orders no element attains are skipped.
pub fn order_sorted_onb(gram: &GramMatrix, base: &[C64], max_degree: u32) -> Result<OrthonormalBasis> {
    let onb = orthonormalize(gram)?;
    let orders = graded_orders(base.len(), max_degree);
    let mut cols: Vec<DVector<C64>> = Vec::new();
    let mut labels = Vec::new();
    for (i, alpha) in orders.iter().enumerate() {
        if cols.len() == onb.rank() {
            break;
        }
        let indices = orders[..=i].to_vec();
        let mut targets = vec![C64::new(0.0, 0.0); i + 1];
        targets[i] = C64::new(1.0, 0.0);
        let ideal = JetIdeal::new(base.to_vec(), indices, targets)?;
        let r = constrained_min_norm_onb(&onb, &ideal)?;
        if r.feasible {
            cols.push(r.coeffs.scale(r.min_norm_sq.sqrt().recip()));
            labels.push(alpha.clone());
        }
    }
    if cols.is_empty() {
        return Err(Error::Degenerate("no attainable vanishing order".into()));
    }
    let rank = cols.len();
    Ok(OrthonormalBasis {
        basis: gram.basis.clone(),
        coeffs: DMatrix::from_columns(&cols),
        eigenvalues: vec![1.0; rank],
        dropped: onb.rank() - rank,
        labels: Some(labels),
    })
}
