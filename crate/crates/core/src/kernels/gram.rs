use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::basis::BasisSpec;
use crate::integration::QuadratureRule;
use crate::{Error, Result, C64};

/// Eigenvalues below this fraction of the trace are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// `G_ab = ⟨φ_a, φ_b⟩ = ∫ φ_a conj(φ_b) dμ` for a finite basis.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub basis: BasisSpec,
    pub label: String,
    pub entries: DMatrix<C64>,
}

impl GramMatrix {
    pub fn from_entries(basis: BasisSpec, label: impl Into<String>, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != basis.dim() || entries.ncols() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} Gram for a basis of size {}",
                entries.nrows(),
                entries.ncols(),
                basis.dim()
            )));
        }
        Ok(Self { basis, label: label.into(), entries })
    }

    /// The matrix `A` with `‖Σ c_a φ_a‖² = c^H A c`; this is `conj(G)`.
    pub fn coefficient_metric(&self) -> DMatrix<C64> {
        self.entries.map(|v| v.conj())
    }

    /// Squared norm of `Σ c_a φ_a`.
    pub fn norm_sq(&self, c: &DVector<C64>) -> f64 {
        (c.adjoint() * self.coefficient_metric() * c)[(0, 0)].re
    }
}

const CHUNK: usize = 2048;

/// Gram matrix of `basis` for the measure `weight · rule`.
///
/// Work is split over node chunks in parallel; each chunk accumulates the
/// upper triangle of `Σ w_i conj(v_i) v_i^T`.
pub fn assemble_gram(
    basis: &BasisSpec,
    label: &str,
    rule: &QuadratureRule,
    weight: &(dyn Fn(&[C64]) -> Result<f64> + Sync),
) -> Result<GramMatrix> {
    if rule.dim() != basis.slots() {
        return Err(Error::Dimension(format!("{}-dimensional rule for {} slots", rule.dim(), basis.slots())));
    }
    let n = basis.dim();
    let chunks: Vec<usize> = (0..rule.len()).step_by(CHUNK).collect();
    let partial: Result<Vec<Vec<C64>>> = chunks
        .par_iter()
        .map(|&start| {
            let mut acc = vec![C64::new(0.0, 0.0); n * n];
            let mut tables = Vec::new();
            let mut v = vec![C64::new(0.0, 0.0); n];
            for i in start..(start + CHUNK).min(rule.len()) {
                let x = rule.point(i);
                let w = weight(x)? * rule.weight(i);
                if !w.is_finite() {
                    return Err(Error::Numerical(format!("weight is not finite at {x:?}")));
                }
                basis.eval_into(x, &mut tables, &mut v);
                for a in 0..n {
                    let ca = v[a].conj() * w;
                    let row = &mut acc[a * n..(a + 1) * n];
                    for b in a..n {
                        row[b] += ca * v[b];
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![C64::new(0.0, 0.0); n * n];
    for p in partial? {
        total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
    }
    // total[a][b] = Σ w conj(φ_a) φ_b = ⟨φ_b, φ_a⟩ = G_ba.
    let entries = DMatrix::from_fn(n, n, |a, b| if a <= b { total[a * n + b].conj() } else { total[b * n + a] });
    GramMatrix::from_entries(basis.clone(), label, entries)
}

/// Orthonormal basis `e_m = Σ_a C_am φ_a` of the span, obtained from a
/// Hermitian eigendecomposition of the Gram matrix.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    pub basis: BasisSpec,
    pub coeffs: DMatrix<C64>,
    /// Eigenvalues of the kept directions.
    pub eigenvalues: Vec<f64>,
    /// Directions discarded by the rank cutoff.
    pub dropped: usize,
    /// Jet orders, for order-sorted bases.
    pub labels: Option<Vec<Vec<u32>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conditioning {
    pub rank: usize,
    pub dropped: usize,
    pub condition: f64,
}

impl OrthonormalBasis {
    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn conditioning(&self) -> Conditioning {
        let max = self.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let min = self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        Conditioning { rank: self.rank(), dropped: self.dropped, condition: max / min }
    }

    /// `(e_m(x))_m`.
    pub fn eval(&self, x: &[C64]) -> DVector<C64> {
        let v = DVector::from_vec(self.basis.eval(x));
        self.coeffs.transpose() * v
    }

    /// `C^H A C`, which should be the identity.
    pub fn transformed_gram(&self, gram: &GramMatrix) -> DMatrix<C64> {
        self.coeffs.adjoint() * gram.coefficient_metric() * &self.coeffs
    }
}

/// Keeps eigen-directions above `RANK_TOLERANCE · trace`.
pub fn orthonormalize(gram: &GramMatrix) -> Result<OrthonormalBasis> {
    let a = gram.coefficient_metric();
    let a = (&a + a.adjoint()).scale(0.5);
    let trace: f64 = (0..a.nrows()).map(|i| a[(i, i)].re).sum();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::Degenerate(format!("{}: trace {trace:e}", gram.label)));
    }
    let eig = SymmetricEigen::new(a);
    let cutoff = RANK_TOLERANCE * trace;
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    if keep.is_empty() {
        return Err(Error::Degenerate(format!("{}: no eigenvalue above {cutoff:e}", gram.label)));
    }
    let dim = gram.basis.dim();
    let mut coeffs = DMatrix::zeros(dim, keep.len());
    let mut eigenvalues = Vec::with_capacity(keep.len());
    for (m, &i) in keep.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        eigenvalues.push(lam);
        let s = 1.0 / lam.sqrt();
        for a in 0..dim {
            coeffs[(a, m)] = eig.eigenvectors[(a, i)] * s;
        }
    }
    Ok(OrthonormalBasis { basis: gram.basis.clone(), coeffs, eigenvalues, dropped: dim - keep.len(), labels: None })
}

/// `K(z, w) = Σ_m e_m(z) conj(e_m(w))`.
pub fn kernel_eval(onb: &OrthonormalBasis, z: &[C64], w: &[C64]) -> C64 {
    let ez = onb.eval(z);
    let ew = onb.eval(w);
    ez.iter().zip(ew.iter()).map(|(a, b)| a * b.conj()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::integration::{area_rule, boundary_rule};
    use crate::kernels::FactorBasis;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn origin() -> C64 {
        C64::new(0.0, 0.0)
    }

    #[test]
    fn disc_bergman_and_szego_at_origin() {
        let d = Domain::unit_disc();
        let basis = BasisSpec::single(FactorBasis::for_domain(&d, 12));
        let g = assemble_gram(&basis, "area", &area_rule(&d, 16, 32).unwrap(), &|_| Ok(1.0)).unwrap();
        let onb = orthonormalize(&g).unwrap();
        assert_relative_eq!(kernel_eval(&onb, &[origin()], &[origin()]).re, 1.0 / PI, epsilon = 1e-13);
        let z = C64::new(0.3, 0.2);
        let exact = 1.0 / (PI * (1.0 - z.norm_sqr()).powi(2));
        let trunc = kernel_eval(&onb, &[z], &[z]).re;
        assert!((trunc - exact).abs() < 1e-9 * exact);
        let rule = boundary_rule(&d, 64).unwrap().scaled(1.0 / (2.0 * PI));
        let g = assemble_gram(&basis, "boundary", &rule, &|_| Ok(1.0)).unwrap();
        let onb = orthonormalize(&g).unwrap();
        assert_relative_eq!(kernel_eval(&onb, &[origin()], &[origin()]).re, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn off_diagonal_kernel_is_hermitian() {
        let d = Domain::unit_disc();
        let basis = BasisSpec::single(FactorBasis::for_domain(&d, 6));
        let g = assemble_gram(&basis, "area", &area_rule(&d, 8, 16).unwrap(), &|z| Ok(1.0 + z[0].re.powi(2)))
            .unwrap();
        let onb = orthonormalize(&g).unwrap();
        let (z, w) = ([C64::new(0.1, 0.4)], [C64::new(-0.3, 0.2)]);
        let a = kernel_eval(&onb, &z, &w);
        let b = kernel_eval(&onb, &w, &z);
        assert_relative_eq!((a - b.conj()).norm(), 0.0, epsilon = 1e-13);
        let id = onb.transformed_gram(&g);
        assert_relative_eq!((id - DMatrix::identity(7, 7)).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn rank_one_gram_is_truncated() {
        let basis = BasisSpec::single(FactorBasis::monomials(origin(), 1, 1.0));
        let ones = DMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        let onb = orthonormalize(&GramMatrix::from_entries(basis.clone(), "ones", ones).unwrap()).unwrap();
        assert_eq!(onb.rank(), 1);
        assert_eq!(onb.dropped, 1);
        let zero = DMatrix::zeros(2, 2);
        assert!(matches!(
            orthonormalize(&GramMatrix::from_entries(basis, "zero", zero).unwrap()),
            Err(Error::Degenerate(_))
        ));
    }
}
