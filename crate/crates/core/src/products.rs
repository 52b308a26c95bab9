//! Product spaces and kernel decompositions.
//!
//! A [`ProductSpaceSpec`] places one coordinate slot on every factor domain
//! `D_j` of `M` and, when fibred, one more slot on every factor of `U`. The
//! measure is a sum of terms, each a product of per-slot boundary or area
//! measures:
//!
//! | measure            | terms                                           |
//! |--------------------|-------------------------------------------------|
//! | planar boundary    | `(1/2π)|dz|` on `∂D`, weight `λ`               |
//! | planar area        | `dA` on `D`, weight `ρ`                        |
//! | mixed boundary     | `Σ_j (1/2π)|dw_j| × dA` on `∂D_j × M_j`        |
//! | distinguished      | `(2π)^{-n} ∏ |dw_j|` on `∂D_1 × ... × ∂D_n`    |
//! | product area       | `dA` on `M`, weight `ρ̃`                        |
//!
//! with the fibre weight `γ dA` on `U` appended to every term when fibred.
//!
//! Gram matrices are assembled in one of two ways. The separable path
//! integrates each slot once and combines the one-dimensional blocks entry
//! by entry; it is exact whenever the weight factorizes over slots. The
//! brute-force path integrates the joint weight over the flattened tensor
//! node set, with a seeded permutation of the basis, seeded rotations and
//! node counts for every slot rule, and shifted expansion centers on discs.
//! The decomposition checks compare the brute-force kernel on the whole
//! space against products of kernels on the factors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Domain;
use crate::integration::{area_rule_rotated, boundary_rule_rotated, tensor_rule, QuadratureRule};
use crate::kernels::jets::{box_orders, constrained_min_norm_onb, graded_lex_below, jet_order, min_norm_solution};
use crate::kernels::{
    assemble_gram, kernel_eval, orthonormalize, BasisSpec, RANK_TOLERANCE, ExtremalResult, FactorBasis, GramMatrix, JetIdeal,
    OrthonormalBasis,
};
use crate::weights::{PsiForm, WeightField};
use crate::{Error, Result, C64, TAU};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    PlanarBoundary,
    PlanarArea,
    MixedBoundary,
    Distinguished,
    ProductArea,
}

impl Measure {
    fn is_planar(self) -> bool {
        matches!(self, Measure::PlanarBoundary | Measure::PlanarArea)
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::PlanarBoundary => "boundary",
            Measure::PlanarArea => "area",
            Measure::MixedBoundary => "mixed-boundary",
            Measure::Distinguished => "distinguished-boundary",
            Measure::ProductArea => "product-area",
        }
    }
}

/// Truncation degrees and quadrature sizes.
///
/// `basis` is the monomial degree (or Laurent range `-N..=N` on annuli) of
/// every base slot and `fiber_basis` that of every fibre slot. Node counts
/// default to values derived from the degree of the slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub basis: u32,
    #[serde(default = "default_fiber_basis")]
    pub fiber_basis: u32,
    #[serde(default)]
    pub boundary_nodes: Option<usize>,
    #[serde(default)]
    pub radial_nodes: Option<usize>,
    #[serde(default)]
    pub angular_nodes: Option<usize>,
}

fn default_fiber_basis() -> u32 {
    4
}

impl Resolution {
    pub fn new(basis: u32, fiber_basis: u32) -> Self {
        Self { basis, fiber_basis, boundary_nodes: None, radial_nodes: None, angular_nodes: None }
    }

    pub fn with_boundary_nodes(mut self, n: usize) -> Self {
        self.boundary_nodes = Some(n);
        self
    }

    pub fn with_area_nodes(mut self, radial: usize, angular: usize) -> Self {
        self.radial_nodes = Some(radial);
        self.angular_nodes = Some(angular);
        self
    }

    /// Twice the degrees and twice every explicit node count.
    pub fn doubled(&self) -> Self {
        Self {
            basis: 2 * self.basis,
            fiber_basis: 2 * self.fiber_basis,
            boundary_nodes: self.boundary_nodes.map(|n| 2 * n),
            radial_nodes: self.radial_nodes.map(|n| 2 * n),
            angular_nodes: self.angular_nodes.map(|n| 2 * n),
        }
    }

    fn boundary_for(&self, deg: u32) -> usize {
        self.boundary_nodes.unwrap_or((16 * deg as usize).max(64))
    }

    fn radial_for(&self, deg: u32) -> usize {
        self.radial_nodes.unwrap_or(deg as usize + 16)
    }

    fn angular_for(&self, deg: u32) -> usize {
        self.angular_nodes.unwrap_or(4 * deg as usize + 16)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSpaceSpec {
    pub field: WeightField,
    pub measure: Measure,
    #[serde(default)]
    pub fibered: bool,
    pub resolution: Resolution,
}

/// How a Gram matrix is put together; see the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assembly {
    Separable,
    BruteForce { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum SlotKind {
    Boundary,
    Area,
}

struct Term {
    /// Measure constant times the γ scale when fibred.
    scale: f64,
    /// The γ scale alone; the joint weight already contains it.
    gamma: f64,
    kinds: Vec<SlotKind>,
}

/// `W` with `W^H M W = I` on the eigen-directions of `M` above the rank cutoff.
fn whitening(m: &DMatrix<C64>, label: &str) -> Result<DMatrix<C64>> {
    let m = (m + m.adjoint()).scale(0.5);
    let trace: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::Degenerate(format!("{label}: block trace {trace:e}")));
    }
    let eig = SymmetricEigen::new(m);
    let keep: Vec<usize> =
        (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > RANK_TOLERANCE * trace).collect();
    let mut w = DMatrix::zeros(eig.eigenvectors.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let sc = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..w.nrows() {
            w[(r, c)] = eig.eigenvectors[(r, i)] * sc;
        }
    }
    Ok(w)
}

/// Orthonormal basis of a separable space whose elements are tensor products
/// `e_i = ∏_s (T_s^T φ_s)[i_s] / sqrt(d_i)`, with the slot index last-fastest.
#[derive(Clone, Debug)]
pub struct TensorOnb {
    pub basis: BasisSpec,
    pub transforms: Vec<DMatrix<C64>>,
    pub ranks: Vec<usize>,
    pub diag: Vec<f64>,
    pub dropped: usize,
}

fn unravel(mut col: usize, ranks: &[usize], idx: &mut [usize]) {
    for s in (0..ranks.len()).rev() {
        idx[s] = col % ranks[s];
        col /= ranks[s];
    }
}

impl TensorOnb {
    pub fn rank(&self) -> usize {
        self.diag.len()
    }

    /// Combines per-slot coordinate vectors `T_s^T x_s` into the full vector.
    fn combine(&self, per_slot: &[DVector<C64>]) -> DVector<C64> {
        let mut out = DVector::from_element(1, C64::new(1.0, 0.0));
        for v in per_slot {
            let mut next = DVector::zeros(out.len() * v.len());
            for (i, a) in out.iter().enumerate() {
                for (k, b) in v.iter().enumerate() {
                    next[i * v.len() + k] = a * b;
                }
            }
            out = next;
        }
        for (o, d) in out.iter_mut().zip(&self.diag) {
            *o /= d.sqrt();
        }
        out
    }

    /// `(e_i(x))_i`.
    pub fn eval(&self, x: &[C64]) -> DVector<C64> {
        let mut tmp = Vec::new();
        let per: Vec<DVector<C64>> = self
            .basis
            .factors()
            .iter()
            .zip(&self.transforms)
            .zip(x)
            .map(|((f, t), &z)| {
                f.values_into(z, &mut tmp);
                t.transpose() * DVector::from_column_slice(&tmp)
            })
            .collect();
        self.combine(&per)
    }

    pub fn kernel(&self, z: &[C64], w: &[C64]) -> C64 {
        let ez = self.eval(z);
        let ew = self.eval(w);
        ez.iter().zip(ew.iter()).map(|(a, b)| a * b.conj()).sum()
    }

    /// Jet constraint matrix in orthonormal coordinates, one row per order of the ideal.
    pub fn jet_matrix(&self, ideal: &JetIdeal) -> Result<DMatrix<C64>> {
        if ideal.base.len() != self.basis.slots() {
            return Err(Error::Dimension("ideal and basis have different slot counts".into()));
        }
        let mut b = DMatrix::zeros(ideal.indices.len(), self.rank());
        for (r, alpha) in ideal.indices.iter().enumerate() {
            let per: Vec<DVector<C64>> = self
                .basis
                .factors()
                .iter()
                .zip(&self.transforms)
                .enumerate()
                .map(|(s, (f, t))| {
                    let row: Vec<C64> =
                        (f.min_exp..=f.max_exp).map(|k| f.taylor(k, ideal.base[s], alpha[s])).collect();
                    t.transpose() * DVector::from_vec(row)
                })
                .collect();
            b.row_mut(r).copy_from(&self.combine(&per).transpose());
        }
        Ok(b)
    }

    pub fn jet_kernel(&self, ideal: &JetIdeal) -> Result<ExtremalResult> {
        Ok(min_norm_solution(&self.jet_matrix(ideal)?, &ideal.targets)?.1)
    }

    /// The same basis with explicit coefficients in the tensor basis.
    pub fn to_dense(&self) -> OrthonormalBasis {
        let dim = self.basis.dim();
        let slots = self.ranks.len();
        let mins: Vec<i32> = self.basis.factors().iter().map(|f| f.min_exp).collect();
        let mut coeffs = DMatrix::zeros(dim, self.rank());
        let mut idx = vec![0usize; slots];
        for col in 0..self.rank() {
            unravel(col, &self.ranks, &mut idx);
            let sc = 1.0 / self.diag[col].sqrt();
            for (a, e) in self.basis.elements().iter().enumerate() {
                let mut v = C64::new(sc, 0.0);
                for s in 0..slots {
                    v *= self.transforms[s][((e[s] - mins[s]) as usize, idx[s])];
                }
                coeffs[(a, col)] = v;
            }
        }
        OrthonormalBasis {
            basis: self.basis.clone(),
            coeffs,
            eigenvalues: self.diag.clone(),
            dropped: self.dropped,
            labels: None,
        }
    }
}

/// Hard cap on the node count of a brute-force tensor rule.
const MAX_BRUTE_NODES: usize = 4_000_000;

impl ProductSpaceSpec {
    pub fn new(field: WeightField, measure: Measure, fibered: bool, resolution: Resolution) -> Self {
        Self { field, measure, fibered, resolution }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        let planar = self.field.form == PsiForm::Planar;
        if self.measure.is_planar() != planar {
            return Err(Error::Unsupported(format!(
                "measure {} does not match the {:?} weight form",
                self.measure.name(),
                self.field.form
            )));
        }
        if self.fibered && self.field.fiber.is_empty() {
            return Err(Error::Weight("a fibred space needs at least one fibre factor".into()));
        }
        if self.resolution.basis == 0 && self.field.factors.iter().any(|f| f.domain.inner_radius().is_some()) {
            return Err(Error::Quadrature("Laurent range must be at least 1".into()));
        }
        Ok(())
    }

    fn n(&self) -> usize {
        self.field.factors.len()
    }

    pub fn slot_count(&self) -> usize {
        self.n() + if self.fibered { self.field.fiber.len() } else { 0 }
    }

    fn slot_domain(&self, s: usize) -> Domain {
        if s < self.n() {
            self.field.factors[s].domain
        } else {
            self.field.fiber[s - self.n()].domain
        }
    }

    fn slot_degree(&self, s: usize) -> u32 {
        if s < self.n() {
            self.resolution.basis
        } else {
            self.resolution.fiber_basis
        }
    }

    /// The tensor basis in the default order.
    pub fn basis(&self) -> BasisSpec {
        BasisSpec::tensor(
            (0..self.slot_count()).map(|s| FactorBasis::for_domain(&self.slot_domain(s), self.slot_degree(s))).collect(),
        )
    }

    /// Base point followed by the fibre base point, for the slots in use.
    pub fn base_point(&self) -> Vec<C64> {
        let mut p = self.field.base_point();
        if self.fibered {
            p.extend(self.field.fiber_base_point());
        }
        p
    }

    fn terms(&self) -> Vec<Term> {
        let n = self.n();
        let fiber = self.slot_count() - n;
        let with_fiber = |mut kinds: Vec<SlotKind>, scale: f64| {
            kinds.extend(std::iter::repeat_n(SlotKind::Area, fiber));
            let g = if fiber > 0 { self.field.gamma_scale } else { 1.0 };
            Term { scale: scale * g, gamma: g, kinds }
        };
        match self.measure {
            Measure::PlanarBoundary => vec![with_fiber(vec![SlotKind::Boundary], 1.0 / TAU)],
            Measure::PlanarArea | Measure::ProductArea => vec![with_fiber(vec![SlotKind::Area; n], 1.0)],
            Measure::Distinguished => vec![with_fiber(vec![SlotKind::Boundary; n], TAU.powi(-(n as i32)))],
            Measure::MixedBoundary => (0..n)
                .map(|j| {
                    let kinds = (0..n).map(|l| if l == j { SlotKind::Boundary } else { SlotKind::Area }).collect();
                    with_fiber(kinds, 1.0 / TAU)
                })
                .collect(),
        }
    }

    fn separable(&self) -> bool {
        match self.measure {
            Measure::ProductArea => self.field.c.is_constant(),
            _ => true,
        }
    }

    /// Per-slot weight in a separable term.
    fn slot_weight(&self, s: usize, kind: SlotKind, z: C64) -> Result<f64> {
        let f = &self.field;
        let n = self.n();
        if s >= n {
            return f.fiber_factor_weight(s - n, z);
        }
        let dom = f.factors[s].domain;
        match (self.measure, kind) {
            (Measure::PlanarBoundary, SlotKind::Boundary) => f.planar_boundary_weight(&dom.boundary_point_at(z)),
            (Measure::PlanarArea, SlotKind::Area) => f.rho(&[z]),
            (Measure::MixedBoundary, SlotKind::Boundary) => {
                Ok(f.boundary_factor(s, &dom.boundary_point_at(z))? / f.factors[s].p)
            }
            (Measure::Distinguished, SlotKind::Boundary) => f.boundary_factor(s, &dom.boundary_point_at(z)),
            (_, SlotKind::Area) => f.factor_weight(s, z),
            (m, k) => Err(Error::Unsupported(format!("slot kind {k:?} under measure {}", m.name()))),
        }
    }

    /// Weight of one term at a full node, computed from the joint formulas.
    fn joint_weight(&self, term: usize, x: &[C64]) -> Result<f64> {
        let f = &self.field;
        let n = self.n();
        let (w, u) = x.split_at(n);
        let gamma = if self.fibered { f.gamma(u)? } else { 1.0 };
        let base = match self.measure {
            Measure::PlanarBoundary => {
                f.planar_boundary_weight(&f.factors[0].domain.boundary_point_at(w[0]))?
            }
            Measure::PlanarArea | Measure::ProductArea => f.rho(w)?,
            Measure::MixedBoundary => {
                f.mixed_boundary_weight(term, &f.factors[term].domain.boundary_point_at(w[term]), w)?
            }
            Measure::Distinguished => {
                let bs: Vec<_> = w.iter().zip(&f.factors).map(|(z, fa)| fa.domain.boundary_point_at(*z)).collect();
                f.distinguished_weight(&bs)?
            }
        };
        Ok(base * gamma)
    }

    fn slot_rule(&self, s: usize, kind: SlotKind, jitter: Option<&mut ChaCha8Rng>) -> Result<QuadratureRule> {
        let d = self.slot_domain(s);
        let deg = self.slot_degree(s);
        let r = &self.resolution;
        let (mut nb, mut nr, mut na, mut phase) = (r.boundary_for(deg), r.radial_for(deg), r.angular_for(deg), 0.0);
        if let Some(rng) = jitter {
            nb += rng.random_range(0..4);
            nr += rng.random_range(0..3);
            na += rng.random_range(0..4);
            phase = rng.random_range(0.0..1.0) * TAU / na.max(nb) as f64;
        }
        match kind {
            SlotKind::Boundary => boundary_rule_rotated(&d, nb, phase),
            SlotKind::Area => area_rule_rotated(&d, nr, na, phase),
        }
    }

    /// Gram matrix of `basis` (which must live on this space's slots).
    pub fn gram(&self, basis: &BasisSpec, assembly: Assembly) -> Result<GramMatrix> {
        self.validate()?;
        if basis.slots() != self.slot_count() {
            return Err(Error::Dimension(format!("basis has {} slots, space {}", basis.slots(), self.slot_count())));
        }
        let label = format!("{}{}", self.measure.name(), if self.fibered { "×fibre" } else { "" });
        let terms = self.terms();
        match assembly {
            Assembly::Separable if self.separable() => {
                let blocks = self.slot_blocks(basis, &terms, &label)?;
                let els = basis.elements();
                let mins: Vec<i32> = basis.factors().iter().map(|f| f.min_exp).collect();
                let dim = basis.dim();
                let mut g = DMatrix::zeros(dim, dim);
                for t in &terms {
                    let bl: Vec<&DMatrix<C64>> = t.kinds.iter().enumerate().map(|(s, k)| &blocks[&(s, *k)]).collect();
                    for a in 0..dim {
                        for b in 0..dim {
                            let mut v = C64::new(t.scale, 0.0);
                            for (s, m) in bl.iter().enumerate() {
                                v *= m[((els[a][s] - mins[s]) as usize, (els[b][s] - mins[s]) as usize)];
                            }
                            g[(a, b)] += v;
                        }
                    }
                }
                GramMatrix::from_entries(basis.clone(), label, g)
            }
            _ => {
                let seed = match assembly {
                    Assembly::BruteForce { seed } => seed,
                    Assembly::Separable => 0,
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_9a7e);
                let mut total: Option<DMatrix<C64>> = None;
                for (ti, t) in terms.iter().enumerate() {
                    let rules: Vec<QuadratureRule> = t
                        .kinds
                        .iter()
                        .enumerate()
                        .map(|(s, &k)| self.slot_rule(s, k, Some(&mut rng)))
                        .collect::<Result<_>>()?;
                    let count = rules.iter().map(|r| r.len()).product::<usize>();
                    if count > MAX_BRUTE_NODES {
                        return Err(Error::Unsupported(format!(
                            "brute-force rule with {count} nodes exceeds {MAX_BRUTE_NODES}; lower the resolution"
                        )));
                    }
                    let refs: Vec<&QuadratureRule> = rules.iter().collect();
                    let rule = tensor_rule(&refs)?.scaled(t.scale / t.gamma);
                    let g = assemble_gram(basis, &label, &rule, &|x| self.joint_weight(ti, x))?;
                    total = Some(match total {
                        None => g.entries,
                        Some(acc) => acc + g.entries,
                    });
                }
                GramMatrix::from_entries(basis.clone(), label, total.expect("at least one term"))
            }
        }
    }

    /// One-slot Gram blocks for every (slot, kind) used by `terms`.
    fn slot_blocks(
        &self,
        basis: &BasisSpec,
        terms: &[Term],
        label: &str,
    ) -> Result<HashMap<(usize, SlotKind), DMatrix<C64>>> {
        let mut blocks = HashMap::new();
        for t in terms {
            for (s, &k) in t.kinds.iter().enumerate() {
                if let std::collections::hash_map::Entry::Vacant(e) = blocks.entry((s, k)) {
                    let fb = BasisSpec::single(basis.factors()[s].clone());
                    let rule = self.slot_rule(s, k, None)?;
                    let g = assemble_gram(&fb, label, &rule, &|x| self.slot_weight(s, k, x[0]))?;
                    e.insert(g.entries);
                }
            }
        }
        Ok(blocks)
    }

    /// Orthonormal basis of a separable space without forming its Gram matrix.
    ///
    /// Every term of the measure is a Kronecker product of one-slot blocks.
    /// Whitening each slot against its area block (or its only block) and
    /// diagonalizing the boundary block in that frame diagonalizes the whole
    /// sum at once, so the cost is that of the one-slot eigenproblems.
    pub fn tensor_onb(&self) -> Result<TensorOnb> {
        self.validate()?;
        if !self.separable() {
            return Err(Error::Unsupported(format!("{} with non-constant c is not separable", self.measure.name())));
        }
        let basis = self.basis();
        let terms = self.terms();
        let label = self.measure.name();
        let blocks = self.slot_blocks(&basis, &terms, label)?;
        let slots = self.slot_count();
        let mut transforms = Vec::with_capacity(slots);
        let mut spectra: Vec<Option<Vec<f64>>> = Vec::with_capacity(slots);
        for s in 0..slots {
            let area = blocks.get(&(s, SlotKind::Area));
            let bdry = blocks.get(&(s, SlotKind::Boundary));
            let reference = area.or(bdry).expect("every slot appears in some term");
            let w = whitening(&reference.map(|v| v.conj()), label)?;
            match (area, bdry) {
                (Some(_), Some(b)) => {
                    let m = w.adjoint() * b.map(|v| v.conj()) * &w;
                    let m = (&m + m.adjoint()).scale(0.5);
                    let eig = SymmetricEigen::new(m);
                    transforms.push(&w * &eig.eigenvectors);
                    spectra.push(Some(eig.eigenvalues.iter().cloned().collect()));
                }
                _ => {
                    transforms.push(w);
                    spectra.push(None);
                }
            }
        }
        let ranks: Vec<usize> = transforms.iter().map(|t| t.ncols()).collect();
        let rank: usize = ranks.iter().product();
        let mut diag = Vec::with_capacity(rank);
        let mut idx = vec![0usize; slots];
        for col in 0..rank {
            unravel(col, &ranks, &mut idx);
            let mut v = 0.0;
            for t in &terms {
                let mut x = t.scale;
                for (s, k) in t.kinds.iter().enumerate() {
                    if let (SlotKind::Boundary, Some(d)) = (k, &spectra[s]) {
                        x *= d[idx[s]];
                    }
                }
                v += x;
            }
            if !(v > 0.0) {
                return Err(Error::Degenerate(format!("{label}: non-positive spectral value {v:e}")));
            }
            diag.push(v);
        }
        Ok(TensorOnb { dropped: basis.dim() - rank, basis, transforms, ranks, diag })
    }

    /// Basis for the brute-force side: disc centers shifted by a seeded offset
    /// of at most a tenth of the radius, elements in seeded random order.
    pub fn scrambled_basis(&self, seed: u64) -> BasisSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factors = (0..self.slot_count())
            .map(|s| {
                let d = self.slot_domain(s);
                let mut f = FactorBasis::for_domain(&d, self.slot_degree(s));
                if d.inner_radius().is_none() {
                    let shift = C64::from_polar(0.1 * d.outer_radius() * rng.random::<f64>(), TAU * rng.random::<f64>());
                    f.center += shift;
                    f.outer *= 1.1;
                    f.inner *= 1.1;
                }
                f
            })
            .collect();
        BasisSpec::tensor(factors).permuted(rng.random())
    }

    pub fn onb(&self, assembly: Assembly) -> Result<OrthonormalBasis> {
        let basis = match assembly {
            Assembly::Separable => self.basis(),
            Assembly::BruteForce { seed } => self.scrambled_basis(seed),
        };
        orthonormalize(&self.gram(&basis, assembly)?)
    }

    /// The base part alone (no fibre).
    pub fn base_space(&self) -> ProductSpaceSpec {
        ProductSpaceSpec { fibered: false, ..self.clone() }
    }

    /// The Bergman space of `U` with weight `γ`.
    pub fn fiber_space(&self) -> Result<ProductSpaceSpec> {
        if self.field.fiber.is_empty() {
            return Err(Error::Weight("no fibre".into()));
        }
        let mut field = self.field.clone();
        field.form = PsiForm::Product;
        // Fibre factors become the factors of a product-area space with c ≡ 1.
        field.factors = field
            .fiber
            .iter()
            .map(|f| crate::weights::WeightFactor::new(f.domain, f.base_point, 1.0).with_phi(f.phi.clone()))
            .collect();
        field.fiber = Vec::new();
        field.c = crate::weights::CFunction::One;
        let mut res = self.resolution;
        res.basis = res.fiber_basis;
        res.boundary_nodes = None;
        let mut spec = ProductSpaceSpec::new(field, Measure::ProductArea, false, res);
        spec.field.gamma_scale = 1.0;
        // Fold γ's constant scale into the first fibre potential.
        spec.field.factors[0].phi = spec.field.factors[0].phi.clone().shifted(-self.field.gamma_scale.ln());
        Ok(spec)
    }

    /// One-slot Bergman space of slot `s` with that slot's area weight.
    fn slot_bergman(&self, s: usize) -> Result<ProductSpaceSpec> {
        let n = self.n();
        if s >= n {
            let fs = self.fiber_space()?;
            let mut f = fs.field.clone();
            f.factors = vec![f.factors[s - n].clone()];
            if s != n {
                // The γ scale was folded into the first fibre slot only.
                f.factors[0].phi = self.field.fiber[s - n].phi.clone();
            }
            return Ok(ProductSpaceSpec::new(f, Measure::ProductArea, false, fs.resolution));
        }
        let mut f = self.field.clone();
        f.fiber = Vec::new();
        f.factors = vec![f.factors[s].clone()];
        let measure = if self.field.form == PsiForm::Planar { Measure::PlanarArea } else { Measure::ProductArea };
        if measure == Measure::ProductArea {
            f.c = crate::weights::CFunction::One;
        }
        Ok(ProductSpaceSpec::new(f, measure, false, self.resolution))
    }
}

/// Kernel `K(z, w)` of the whole space, assembled by brute force.
pub fn direct_kernel(spec: &ProductSpaceSpec, z: &[C64], w: &[C64], seed: u64) -> Result<C64> {
    let onb = spec.onb(Assembly::BruteForce { seed })?;
    Ok(kernel_eval(&onb, z, w))
}

/// Kernel of the whole space as a product of kernels on the factors.
///
/// Fibred spaces split as (base kernel) × (Bergman kernel of `U`); a
/// product-area space with constant `c` splits into one Bergman kernel per
/// slot; the distinguished boundary splits into one boundary kernel per
/// factor. Anything else has no factorization.
pub fn factored_kernel(spec: &ProductSpaceSpec, z: &[C64], w: &[C64]) -> Result<C64> {
    spec.validate()?;
    let n = spec.n();
    if spec.measure == Measure::ProductArea && spec.field.c.is_constant() || spec.measure == Measure::PlanarArea
    {
        let mut k = C64::new(1.0, 0.0);
        for s in 0..spec.slot_count() {
            let onb = spec.slot_bergman(s)?.onb(Assembly::Separable)?;
            k *= kernel_eval(&onb, &z[s..=s], &w[s..=s]);
        }
        return Ok(k);
    }
    if spec.fibered {
        let base = spec.base_space().onb(Assembly::Separable)?;
        let fiber = spec.fiber_space()?.onb(Assembly::Separable)?;
        return Ok(kernel_eval(&base, &z[..n], &w[..n]) * kernel_eval(&fiber, &z[n..], &w[n..]));
    }
    if spec.measure == Measure::Distinguished {
        let mut k = C64::new(1.0, 0.0);
        for j in 0..n {
            let mut f = spec.field.clone();
            f.factors = vec![f.factors[j].clone()];
            f.fiber = Vec::new();
            let one = ProductSpaceSpec::new(f, Measure::Distinguished, false, spec.resolution);
            k *= kernel_eval(&one.onb(Assembly::Separable)?, &z[j..=j], &w[j..=j]);
        }
        return Ok(k);
    }
    Err(Error::Unsupported(format!("no factorization for {}", spec.measure.name())))
}

/// Taylor data of the jet problems on a fibred product.
///
/// `l[j]` is the jet of `l_j` at the base coordinate `z_j` and `b[i]` that of
/// `b_i` at `u_i`; `h_0 = ∏ l_j(w_j) ∏ b_i(u_i)`. The base ideal is the box
/// below `beta_tilde`; the fibre ideal consists of the orders up to
/// `ord(b_0)` in graded-lex order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetData {
    pub beta_tilde: Vec<u32>,
    pub l: Vec<Vec<C64>>,
    #[serde(default)]
    pub b: Vec<Vec<C64>>,
}

impl JetData {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.beta_tilde.len() != n || self.l.len() != n {
            return Err(Error::Dimension(format!("jets need {n} base orders and {n} base jets")));
        }
        for (lj, bt) in self.l.iter().zip(&self.beta_tilde) {
            match jet_order(lj) {
                Some(o) if o <= *bt => {}
                _ => return Err(Error::Hypothesis(format!("jet order of l_j must be at most β̃_j = {bt}"))),
            }
        }
        if m > 0 && self.b.len() != m {
            return Err(Error::Dimension(format!("jets need {m} fibre jets")));
        }
        if self.b.iter().any(|bi| jet_order(bi).is_none()) {
            return Err(Error::Hypothesis("fibre jet b_0 vanishes identically".into()));
        }
        Ok(())
    }

    /// Order of `b_0` in the fibre variables.
    pub fn fiber_order(&self) -> Vec<u32> {
        self.b.iter().map(|bi| jet_order(bi).unwrap_or(0)).collect()
    }

    pub fn base_ideal(&self, base: &[C64]) -> Result<JetIdeal> {
        JetIdeal::from_product_jets(base.to_vec(), box_orders(&self.beta_tilde), &self.l)
    }

    pub fn fiber_ideal(&self, base: &[C64]) -> Result<JetIdeal> {
        JetIdeal::from_product_jets(base.to_vec(), graded_lex_below(&self.fiber_order()), &self.b)
    }
}

/// Jet kernel value of the whole space at `point`, brute force or separable.
pub fn direct_jet_kernel(
    spec: &ProductSpaceSpec,
    jets: &JetData,
    point: &[C64],
    assembly: Assembly,
) -> Result<ExtremalResult> {
    let onb = spec.onb(assembly)?;
    direct_jet_kernel_onb(spec, jets, point, &onb)
}

fn direct_jet_kernel_onb(
    spec: &ProductSpaceSpec,
    jets: &JetData,
    point: &[C64],
    onb: &OrthonormalBasis,
) -> Result<ExtremalResult> {
    let n = spec.n();
    let ideal = if spec.fibered {
        jets.base_ideal(&point[..n])?.product(&jets.fiber_ideal(&point[n..])?)
    } else {
        jets.base_ideal(point)?
    };
    constrained_min_norm_onb(onb, &ideal)
}

/// Jet kernel of a fibred space as (base jet kernel) × (fibre jet kernel).
pub fn factored_jet_kernel(spec: &ProductSpaceSpec, jets: &JetData, point: &[C64]) -> Result<f64> {
    let n = spec.n();
    if !spec.fibered {
        return Err(Error::Unsupported("factored jet kernels need a fibred space".into()));
    }
    let base = spec.base_space().onb(Assembly::Separable)?;
    let fiber = spec.fiber_space()?.onb(Assembly::Separable)?;
    let a = constrained_min_norm_onb(&base, &jets.base_ideal(&point[..n])?)?;
    let b = constrained_min_norm_onb(&fiber, &jets.fiber_ideal(&point[n..])?)?;
    Ok(a.kernel_value * b.kernel_value)
}

/// The kernel decomposition identities that can be checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// `K_{∂D×U,λγ} = K_{∂D,λ} · B_{U,γ}`.
    BoundaryFiber,
    /// Bergman kernel of a product with product weight = product of Bergman kernels.
    BergmanProduct,
    /// `K_{∂M×U} = K_{∂M} · B_U`.
    MixedBoundaryFiber,
    /// Jet Bergman kernel of `M × U` = jet kernel of `M` × jet kernel of `U`.
    BergmanJetFiber,
    /// Jet kernel of `∂M × U` = jet kernel of `∂M` × jet Bergman kernel of `U`.
    MixedBoundaryJetFiber,
    /// `K_{S×U} = K_S · B_U`.
    DistinguishedFiber,
    /// Jet kernel of `S × U` = jet kernel of `S` × jet Bergman kernel of `U`.
    DistinguishedJetFiber,
}

impl Identity {
    pub const ALL: [Identity; 7] = [
        Identity::BoundaryFiber,
        Identity::BergmanProduct,
        Identity::MixedBoundaryFiber,
        Identity::BergmanJetFiber,
        Identity::MixedBoundaryJetFiber,
        Identity::DistinguishedFiber,
        Identity::DistinguishedJetFiber,
    ];

    /// Parses the short ids used on the command line.
    pub fn parse(s: &str) -> Result<Self> {
        let id = match s.to_ascii_lowercase().as_str() {
            "3:e4" | "boundary-fiber" => Identity::BoundaryFiber,
            "3:e8" | "bergman-product" => Identity::BergmanProduct,
            "pro-28" | "mixed-boundary-fiber" => Identity::MixedBoundaryFiber,
            "berg-decomp" | "bergman-jet-fiber" => Identity::BergmanJetFiber,
            "eq-1" | "eq-(1)" | "mixed-boundary-jet-fiber" => Identity::MixedBoundaryJetFiber,
            "key-decomp1" | "distinguished-fiber" => Identity::DistinguishedFiber,
            "s-decomp" | "distinguished-jet-fiber" => Identity::DistinguishedJetFiber,
            other => return Err(Error::Unsupported(format!("unknown identity {other}"))),
        };
        Ok(id)
    }

    pub fn id(self) -> &'static str {
        match self {
            Identity::BoundaryFiber => "3:E4",
            Identity::BergmanProduct => "3:E8",
            Identity::MixedBoundaryFiber => "pro-28",
            Identity::BergmanJetFiber => "berg-decomp",
            Identity::MixedBoundaryJetFiber => "eq-1",
            Identity::DistinguishedFiber => "key-decomp1",
            Identity::DistinguishedJetFiber => "s-decomp",
        }
    }

    pub fn is_jet(self) -> bool {
        matches!(
            self,
            Identity::BergmanJetFiber | Identity::MixedBoundaryJetFiber | Identity::DistinguishedJetFiber
        )
    }

    /// Measure and fibring the identity is about, given the weight form.
    fn measure(self, form: PsiForm) -> (Measure, bool) {
        match self {
            Identity::BoundaryFiber => (Measure::PlanarBoundary, true),
            Identity::BergmanProduct | Identity::BergmanJetFiber => {
                (if form == PsiForm::Planar { Measure::PlanarArea } else { Measure::ProductArea }, true)
            }
            Identity::MixedBoundaryFiber | Identity::MixedBoundaryJetFiber => (Measure::MixedBoundary, true),
            Identity::DistinguishedFiber | Identity::DistinguishedJetFiber => (Measure::Distinguished, true),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionSample {
    pub z: Vec<C64>,
    pub w: Vec<C64>,
    pub direct: C64,
    pub factored: C64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub identity: String,
    pub measure: String,
    pub basis_dim: usize,
    pub tolerance: f64,
    pub samples: Vec<DecompositionSample>,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Seeded interior points at least a fifth of the width away from the boundary.
pub fn sample_points(domains: &[Domain], count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            domains
                .iter()
                .map(|d| {
                    let (lo, hi) = match d.inner_radius() {
                        None => (0.0, 0.6 * d.outer_radius()),
                        Some(r) => {
                            let w = d.outer_radius() - r;
                            (r + 0.2 * w, d.outer_radius() - 0.2 * w)
                        }
                    };
                    d.center() + C64::from_polar(rng.random_range(lo..hi), rng.random_range(0.0..TAU))
                })
                .collect()
        })
        .collect()
}

/// Compares the brute-force kernel of the whole space against the factored
/// form on `count` seeded sample points (pairs `(z, w)` for kernels, jet base
/// points for jet kernels).
pub fn verify_decomposition(
    identity: Identity,
    field: &WeightField,
    resolution: Resolution,
    jets: Option<&JetData>,
    count: usize,
    seed: u64,
    tolerance: f64,
) -> Result<DecompositionReport> {
    let (measure, fibered) = identity.measure(field.form);
    let spec = ProductSpaceSpec::new(field.clone(), measure, fibered, resolution);
    spec.validate()?;
    let domains: Vec<Domain> = (0..spec.slot_count()).map(|s| spec.slot_domain(s)).collect();
    let onb = spec.onb(Assembly::BruteForce { seed })?;
    let zs = sample_points(&domains, count, seed.wrapping_add(1));
    let ws = sample_points(&domains, count, seed.wrapping_add(2));
    let mut samples = Vec::with_capacity(count);
    if identity.is_jet() {
        let jets = jets.ok_or_else(|| Error::Hypothesis(format!("{} needs jet data", identity.id())))?;
        jets.validate(spec.n(), field.fiber.len())?;
        let base = spec.base_space().onb(Assembly::Separable)?;
        let fiber = spec.fiber_space()?.onb(Assembly::Separable)?;
        let n = spec.n();
        for z in zs {
            let d = direct_jet_kernel_onb(&spec, jets, &z, &onb)?;
            let a = constrained_min_norm_onb(&base, &jets.base_ideal(&z[..n])?)?;
            let b = constrained_min_norm_onb(&fiber, &jets.fiber_ideal(&z[n..])?)?;
            let f = a.kernel_value * b.kernel_value;
            let rel = if d.kernel_value == 0.0 && f == 0.0 { 0.0 } else { (d.kernel_value - f).abs() / d.kernel_value.abs() };
            samples.push(DecompositionSample {
                z: z.clone(),
                w: z,
                direct: C64::new(d.kernel_value, 0.0),
                factored: C64::new(f, 0.0),
                rel_err: rel,
            });
        }
    } else {
        for (z, w) in zs.into_iter().zip(ws) {
            let d = kernel_eval(&onb, &z, &w);
            let f = factored_kernel(&spec, &z, &w)?;
            samples.push(DecompositionSample { rel_err: (d - f).norm() / d.norm(), z, w, direct: d, factored: f });
        }
    }
    let max_rel_err = samples.iter().map(|s| s.rel_err).fold(0.0, f64::max);
    Ok(DecompositionReport {
        identity: identity.id().to_string(),
        measure: spec.measure.name().to_string(),
        basis_dim: onb.basis.dim(),
        tolerance,
        pass: max_rel_err <= tolerance,
        samples,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Potential;
    use crate::weights::{FiberFactor, WeightFactor};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn origin() -> C64 {
        C64::new(0.0, 0.0)
    }

    fn bidisc(p: f64) -> WeightField {
        let d = Domain::unit_disc();
        WeightField::product(vec![WeightFactor::new(d, origin(), p), WeightFactor::new(d, origin(), p)])
    }

    #[test]
    fn mixed_boundary_kernel_of_bidisc_at_origin() {
        let spec = ProductSpaceSpec::new(bidisc(2.0), Measure::MixedBoundary, false, Resolution::new(6, 0));
        let onb = spec.onb(Assembly::Separable).unwrap();
        let k = kernel_eval(&onb, &[origin(), origin()], &[origin(), origin()]);
        assert_relative_eq!(k.re, 1.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn separable_and_brute_force_agree() {
        let d = Domain::unit_disc();
        let field = WeightField::product(vec![
            WeightFactor::new(d, C64::new(0.2, 0.1), 2.0),
            WeightFactor::new(d, C64::new(-0.1, 0.0), 3.0)
                .with_phi(crate::geometry::Potential::zero().with_poly(vec![origin(), C64::new(0.3, 0.0)])),
        ]);
        let spec = ProductSpaceSpec::new(field, Measure::MixedBoundary, false, Resolution::new(3, 0));
        let z = [C64::new(0.1, 0.2), C64::new(-0.3, 0.1)];
        let a = kernel_eval(&spec.onb(Assembly::Separable).unwrap(), &z, &z);
        let b = kernel_eval(&spec.onb(Assembly::BruteForce { seed: 3 }).unwrap(), &z, &z);
        assert_relative_eq!(a.re, b.re, max_relative = 1e-9);
    }

    #[test]
    fn bergman_product_on_bidisc() {
        let d = Domain::unit_disc();
        let field = bidisc(2.0).with_fiber(vec![FiberFactor::new(d, origin())]);
        let spec = ProductSpaceSpec::new(field, Measure::ProductArea, false, Resolution::new(4, 4));
        let k = factored_kernel(&spec, &[origin(), origin()], &[origin(), origin()]).unwrap();
        assert_relative_eq!(k.re, 1.0 / (PI * PI), epsilon = 1e-12);
    }

    #[test]
    fn gamma_scale_halves_the_factored_kernel() {
        let d = Domain::unit_disc();
        let field = WeightField::planar(d, origin(), 1.0).with_fiber(vec![FiberFactor::new(d, origin())]);
        let x = [C64::new(0.1, 0.0), C64::new(0.2, 0.1)];
        let spec = ProductSpaceSpec::new(field.clone(), Measure::PlanarBoundary, true, Resolution::new(4, 4));
        let a = factored_kernel(&spec, &x, &x).unwrap();
        let spec2 = ProductSpaceSpec::new(field.with_gamma_scale(2.0), Measure::PlanarBoundary, true, Resolution::new(4, 4));
        let b = factored_kernel(&spec2, &x, &x).unwrap();
        assert_relative_eq!(b.re, 0.5 * a.re, max_relative = 1e-12);
    }

    #[test]
    fn mixed_boundary_without_fibre_has_no_factorization() {
        let spec = ProductSpaceSpec::new(bidisc(2.0), Measure::MixedBoundary, false, Resolution::new(2, 0));
        let z = [origin(), origin()];
        assert!(matches!(factored_kernel(&spec, &z, &z), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tensor_basis_matches_dense_gram() {
        let ann = Domain::annulus(C64::new(0.0, 0.0), 0.4, 1.0).unwrap();
        let d = Domain::unit_disc();
        let field = WeightField::product(vec![
            WeightFactor::new(ann, C64::new(0.0, 0.65), 2.0),
            WeightFactor::new(d, C64::new(0.1, -0.2), 3.0).with_phi(Potential::zero().with_green(C64::new(0.3, 0.0), 0.5)),
        ]);
        let z = [C64::new(0.2, 0.5), C64::new(-0.1, 0.3)];
        let w = [C64::new(-0.6, 0.1), C64::new(0.2, 0.0)];
        for m in [Measure::MixedBoundary, Measure::Distinguished, Measure::ProductArea] {
            let spec = ProductSpaceSpec::new(field.clone(), m, false, Resolution::new(5, 3));
            let dense = spec.onb(Assembly::Separable).unwrap();
            let t = spec.tensor_onb().unwrap();
            let a = kernel_eval(&dense, &z, &w);
            let b = t.kernel(&z, &w);
            assert!((a - b).norm() < 1e-9 * a.norm(), "{m:?}: {a} vs {b}");
            let b2 = kernel_eval(&t.to_dense(), &z, &w);
            assert!((a - b2).norm() < 1e-9 * a.norm());
            let jets = JetData {
                beta_tilde: vec![1, 1],
                l: vec![vec![C64::new(1.0, 0.0), C64::new(0.5, 0.0)], vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]],
                b: vec![],
            };
            let ideal = jets.base_ideal(&spec.base_point()).unwrap();
            let x = constrained_min_norm_onb(&dense, &ideal).unwrap().kernel_value;
            let y = t.jet_kernel(&ideal).unwrap().kernel_value;
            assert!((x - y).abs() < 1e-8 * x, "{m:?}: {x} vs {y}");
        }
    }
}
