use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Domain;
use crate::{Error, Result, C64};

/// Scaled powers `((z - c)/s_k)^k` for `k` in `min_exp..=max_exp`, with
/// `s_k = outer` for `k >= 0` and `s_k = inner` for `k < 0`.
///
/// The scaling keeps every basis function of size about one on its domain,
/// which matters a lot for the conditioning of Laurent Gram matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorBasis {
    pub center: C64,
    pub min_exp: i32,
    pub max_exp: i32,
    pub outer: f64,
    pub inner: f64,
}

impl FactorBasis {
    pub fn monomials(center: C64, degree: u32, scale: f64) -> Self {
        Self { center, min_exp: 0, max_exp: degree as i32, outer: scale, inner: scale }
    }

    pub fn laurent(center: C64, n: u32, inner: f64, outer: f64) -> Self {
        Self { center, min_exp: -(n as i32), max_exp: n as i32, outer, inner }
    }

    /// Monomials up to degree `n` on a disc, Laurent terms `-n..=n` on an annulus.
    pub fn for_domain(domain: &Domain, n: u32) -> Self {
        match domain.inner_radius() {
            None => Self::monomials(domain.center(), n, domain.outer_radius()),
            Some(r) => Self::laurent(domain.center(), n, r, domain.outer_radius()),
        }
    }

    pub fn len(&self) -> usize {
        (self.max_exp - self.min_exp + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.max_exp < self.min_exp
    }

    fn scale(&self, k: i32) -> f64 {
        if k >= 0 {
            self.outer
        } else {
            self.inner
        }
    }

    pub fn value(&self, k: i32, z: C64) -> C64 {
        ((z - self.center) / self.scale(k)).powi(k)
    }

    /// All basis values at `z`, indexed by `k - min_exp`.
    pub fn values_into(&self, z: C64, out: &mut Vec<C64>) {
        out.clear();
        let w_pos = (z - self.center) / self.outer;
        if self.min_exp < 0 {
            let w_neg = ((z - self.center) / self.inner).inv();
            let mut p = w_neg.powi(-self.min_exp);
            for _ in self.min_exp..0 {
                out.push(p);
                p /= w_neg;
            }
        }
        let mut p = C64::new(1.0, 0.0);
        for k in 0..=self.max_exp {
            if k >= self.min_exp {
                out.push(p);
            }
            p *= w_pos;
        }
    }

    /// Coefficient of `(z - z0)^j` in the Taylor expansion of basis function `k` at `z0`.
    pub fn taylor(&self, k: i32, z0: C64, j: u32) -> C64 {
        let mut binom = 1.0;
        for i in 0..j {
            binom *= (k as f64 - i as f64) / (i as f64 + 1.0);
        }
        if binom == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let s = self.scale(k);
        let d = z0 - self.center;
        let e = k - j as i32;
        let p = if e == 0 { C64::new(1.0, 0.0) } else { d.powi(e) };
        p * (binom / s.powi(k))
    }
}

/// A finite tensor-product basis: one [`FactorBasis`] per coordinate slot and
/// an explicit list of exponent tuples.
///
/// The default order is lexicographic with the last slot fastest; a seeded
/// shuffle gives an order with no tensor structure at all.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    factors: Vec<FactorBasis>,
    elements: Vec<Vec<i32>>,
}

impl BasisSpec {
    pub fn tensor(factors: Vec<FactorBasis>) -> Self {
        let mut elements = vec![Vec::new()];
        for f in &factors {
            let mut next = Vec::with_capacity(elements.len() * f.len());
            for e in &elements {
                for k in f.min_exp..=f.max_exp {
                    let mut e = e.clone();
                    e.push(k);
                    next.push(e);
                }
            }
            elements = next;
        }
        Self { factors, elements }
    }

    pub fn single(factor: FactorBasis) -> Self {
        Self::tensor(vec![factor])
    }

    pub fn from_elements(factors: Vec<FactorBasis>, elements: Vec<Vec<i32>>) -> Result<Self> {
        for e in &elements {
            if e.len() != factors.len()
                || e.iter().zip(&factors).any(|(k, f)| *k < f.min_exp || *k > f.max_exp)
            {
                return Err(Error::Dimension(format!("exponent tuple {e:?} does not fit the factors")));
            }
        }
        Ok(Self { factors, elements })
    }

    /// The same span with the elements in a seeded random order.
    pub fn permuted(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.elements.shuffle(&mut rng);
        self
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn slots(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[FactorBasis] {
        &self.factors
    }

    pub fn elements(&self) -> &[Vec<i32>] {
        &self.elements
    }

    pub fn index_of(&self, exps: &[i32]) -> Option<usize> {
        self.elements.iter().position(|e| e == exps)
    }

    /// Values of every element at the point `x` (one coordinate per slot).
    pub fn eval(&self, x: &[C64]) -> Vec<C64> {
        let mut tables = Vec::new();
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.eval_into(x, &mut tables, &mut out);
        out
    }

    pub(crate) fn eval_into(&self, x: &[C64], tables: &mut Vec<Vec<C64>>, out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.slots());
        tables.resize_with(self.slots(), Vec::new);
        for ((f, t), &xs) in self.factors.iter().zip(tables.iter_mut()).zip(x) {
            f.values_into(xs, t);
        }
        for (o, e) in out.iter_mut().zip(&self.elements) {
            let mut v = C64::new(1.0, 0.0);
            for ((k, f), t) in e.iter().zip(&self.factors).zip(tables.iter()) {
                v *= t[(k - f.min_exp) as usize];
            }
            *o = v;
        }
    }

    /// Taylor coefficient of multi-order `alpha` at `base` for every element.
    pub fn jet_row(&self, base: &[C64], alpha: &[u32]) -> Vec<C64> {
        self.elements
            .iter()
            .map(|e| {
                e.iter()
                    .zip(&self.factors)
                    .zip(base.iter().zip(alpha))
                    .map(|((k, f), (z0, j))| f.taylor(*k, *z0, *j))
                    .product()
            })
            .collect()
    }
}
