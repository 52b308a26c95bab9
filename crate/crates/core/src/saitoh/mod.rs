//! Saitoh-type inequalities between boundary kernels and Bergman kernels.
//!
//! Every inequality has the shape `a · K(z_0) ≥ b · B(z_0)` where `K` is a
//! Hardy-type kernel (boundary, mixed boundary or distinguished boundary),
//! `B` a Bergman kernel or a smaller Hardy kernel, and `a`, `b` exact
//! constants. [`evaluate`] computes both sides at a configured resolution
//! and again at twice that resolution, and reports their ratio.

mod cases;
mod sweep;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::kernels::jets::constrained_min_norm_onb;
use crate::kernels::{kernel_eval, JetIdeal};
use crate::products::{Assembly, JetData, Measure, ProductSpaceSpec, Resolution};
use crate::weights::{jet_admissibility, PsiForm, WeightField};
use crate::{Error, Result};

pub use cases::{equality_case_config, strictness_probe, EqualityCase, HarmonicFamily, Perturbation, ProbeReport};
pub use sweep::{sweep, SweepAxis, SweepPoint, SweepReport, SweepSummary};

/// The inequalities that can be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// Unweighted Hardy vs Bergman kernel on one domain.
    Saitoh,
    /// Weighted version with `ψ = p_0 G` and profile `c`.
    WeightedPlanar,
    /// Weighted version on `D × U`.
    WeightedPlanarFiber,
    /// Mixed boundary of a product vs its Bergman kernel.
    MixedBoundary,
    /// Mixed boundary jet kernel vs Bergman jet kernel.
    MixedBoundaryJet,
    MixedBoundaryFiber,
    MixedBoundaryJetFiber,
    /// Distinguished boundary vs mixed boundary.
    Distinguished,
    DistinguishedFiber,
    DistinguishedJet,
    DistinguishedJetFiber,
}

impl Inequality {
    pub const ALL: [Inequality; 11] = [
        Inequality::Saitoh,
        Inequality::WeightedPlanar,
        Inequality::WeightedPlanarFiber,
        Inequality::MixedBoundary,
        Inequality::MixedBoundaryJet,
        Inequality::MixedBoundaryFiber,
        Inequality::MixedBoundaryJetFiber,
        Inequality::Distinguished,
        Inequality::DistinguishedFiber,
        Inequality::DistinguishedJet,
        Inequality::DistinguishedJetFiber,
    ];

    /// Accepts the kebab-case names as well as the short theorem ids.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let found = Self::ALL.into_iter().find(|i| i.name() == t || i.id() == t);
        found.ok_or_else(|| Error::Unsupported(format!("unknown theorem id {s:?}")))
    }

    pub fn id(self) -> &'static str {
        match self {
            Inequality::Saitoh => "thm1.2",
            Inequality::WeightedPlanar => "thm1.3",
            Inequality::WeightedPlanarFiber => "thm1.6",
            Inequality::MixedBoundary => "thm1.8",
            Inequality::MixedBoundaryJet => "thm1.9",
            Inequality::MixedBoundaryFiber => "thm1.10",
            Inequality::MixedBoundaryJetFiber => "thm1.11",
            Inequality::Distinguished => "thm1.13",
            Inequality::DistinguishedFiber => "thm1.15",
            Inequality::DistinguishedJet => "thm1.16",
            Inequality::DistinguishedJetFiber => "thm1.19",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Inequality::Saitoh => "saitoh",
            Inequality::WeightedPlanar => "weighted-planar",
            Inequality::WeightedPlanarFiber => "weighted-planar-fiber",
            Inequality::MixedBoundary => "mixed-boundary",
            Inequality::MixedBoundaryJet => "mixed-boundary-jet",
            Inequality::MixedBoundaryFiber => "mixed-boundary-fiber",
            Inequality::MixedBoundaryJetFiber => "mixed-boundary-jet-fiber",
            Inequality::Distinguished => "distinguished",
            Inequality::DistinguishedFiber => "distinguished-fiber",
            Inequality::DistinguishedJet => "distinguished-jet",
            Inequality::DistinguishedJetFiber => "distinguished-jet-fiber",
        }
    }

    pub fn is_planar(self) -> bool {
        matches!(self, Inequality::Saitoh | Inequality::WeightedPlanar | Inequality::WeightedPlanarFiber)
    }

    pub fn is_fibered(self) -> bool {
        matches!(
            self,
            Inequality::WeightedPlanarFiber
                | Inequality::MixedBoundaryFiber
                | Inequality::MixedBoundaryJetFiber
                | Inequality::DistinguishedFiber
                | Inequality::DistinguishedJetFiber
        )
    }

    pub fn is_jet(self) -> bool {
        matches!(
            self,
            Inequality::MixedBoundaryJet
                | Inequality::MixedBoundaryJetFiber
                | Inequality::DistinguishedJet
                | Inequality::DistinguishedJetFiber
        )
    }

    fn is_distinguished(self) -> bool {
        matches!(
            self,
            Inequality::Distinguished
                | Inequality::DistinguishedFiber
                | Inequality::DistinguishedJet
                | Inequality::DistinguishedJetFiber
        )
    }

    fn needs_several_factors(self) -> bool {
        matches!(self, Inequality::MixedBoundary | Inequality::MixedBoundaryFiber) || self.is_distinguished()
    }

    /// The two measures compared, larger kernel first.
    fn measures(self) -> (Measure, Measure) {
        if self.is_planar() {
            (Measure::PlanarBoundary, Measure::PlanarArea)
        } else if self.is_distinguished() {
            (Measure::Distinguished, Measure::MixedBoundary)
        } else {
            (Measure::MixedBoundary, Measure::ProductArea)
        }
    }
}

impl std::fmt::Display for Inequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `|ratio - 1|` below this counts as equality.
    pub equality: f64,
    /// Minimum distance of base points from the boundary, relative to the outer radius.
    pub boundary_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { equality: 1e-4, boundary_margin: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremConfig {
    pub field: WeightField,
    #[serde(default)]
    pub jets: Option<JetData>,
    pub resolution: Resolution,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl TheoremConfig {
    pub fn new(field: WeightField, resolution: Resolution) -> Self {
        Self { field, jets: None, resolution, tolerances: Tolerances::default() }
    }

    pub fn with_jets(mut self, jets: JetData) -> Self {
        self.jets = Some(jets);
        self
    }

    /// Degrees that resolve the kernels of `field` well at moderate cost:
    /// Laurent range 40 on one annulus, 30 on products with an annulus, degree 16
    /// on one disc and 8 per factor on products of discs.
    pub fn default_resolution(field: &WeightField) -> Resolution {
        let annulus = field.factors.iter().any(|f| f.domain.inner_radius().is_some());
        let basis = match (field.factors.len(), annulus) {
            (1, true) => 40,
            (1, false) => 16,
            (_, true) => 30,
            _ => 8,
        };
        Resolution::new(basis, 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equality,
    Strict,
    /// The computed ratio is below one: a numerical problem, never a result.
    ViolationFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sizes {
    pub basis_degree: u32,
    pub fiber_degree: u32,
    /// Dimension of the span on the larger-kernel side.
    pub basis_dim: usize,
    pub boundary_nodes: Option<usize>,
    pub radial_nodes: Option<usize>,
    pub angular_nodes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub theorem: String,
    /// Left side including its constant.
    pub lhs: f64,
    /// Right side including its constant.
    pub rhs: f64,
    pub ratio: f64,
    /// The constant multiplying the smaller kernel.
    pub constant_used: f64,
    /// The constant multiplying the larger kernel (1 except for jet versions on the distinguished boundary).
    pub lhs_constant: f64,
    pub lhs_kernel: f64,
    pub rhs_kernel: f64,
    pub sizes: Sizes,
    /// `|ratio(2×) − ratio(1×)|`, absent when refinement was skipped.
    pub refinement_delta: Option<f64>,
    pub refined_ratio: Option<f64>,
    pub verdict: Verdict,
    /// Eigen-directions dropped by the rank cutoff on either side.
    pub dropped_directions: usize,
}

/// Rejects configurations outside the hypotheses of `ineq`, naming the
/// failed hypothesis.
pub fn check_hypotheses(ineq: Inequality, cfg: &TheoremConfig) -> Result<()> {
    let field = &cfg.field;
    field.validate()?;
    let want = if ineq.is_planar() { PsiForm::Planar } else { PsiForm::Product };
    if field.form != want {
        return Err(Error::Hypothesis(format!("{ineq} needs the {want:?} weight form")));
    }
    for f in &field.factors {
        let margin = cfg.tolerances.boundary_margin * f.domain.outer_radius();
        if f.domain.boundary_distance(f.base_point) < margin {
            return Err(Error::Hypothesis(format!(
                "base point {} is closer than {margin} to the boundary",
                f.base_point
            )));
        }
    }
    if ineq.is_fibered() {
        if field.fiber.is_empty() {
            return Err(Error::Hypothesis(format!("{ineq} needs a fibre domain U")));
        }
        for f in &field.fiber {
            let margin = cfg.tolerances.boundary_margin * f.domain.outer_radius();
            if f.domain.boundary_distance(f.base_point) < margin {
                return Err(Error::Hypothesis(format!("fibre point {} is too close to ∂U", f.base_point)));
            }
        }
    }
    match ineq {
        Inequality::Saitoh => {
            let f = &field.factors[0];
            if f.p != 1.0 || f.phi != crate::geometry::Potential::zero() || !field.c.is_constant() {
                return Err(Error::Hypothesis("the unweighted inequality takes p = 1, φ = 0 and c ≡ 1".into()));
            }
        }
        Inequality::WeightedPlanar | Inequality::WeightedPlanarFiber => {
            let lelong = field.lelong_number();
            if lelong < 2.0 - 1e-12 {
                return Err(Error::Hypothesis(format!("Lelong number of φ + 2ψ at z_0 is {lelong}, below 2")));
            }
        }
        _ => {}
    }
    if ineq.needs_several_factors() && field.n() < 2 {
        return Err(Error::Hypothesis(format!("{ineq} requires n > 1")));
    }
    if matches!(ineq, Inequality::MixedBoundary | Inequality::MixedBoundaryFiber) {
        let s = field.inverse_p_sum();
        if s > 1.0 + 1e-12 {
            return Err(Error::Hypothesis(format!("Σ 1/p_j = {s} exceeds 1")));
        }
    }
    if ineq.is_jet() {
        let jets = cfg.jets.as_ref().ok_or_else(|| Error::Hypothesis(format!("{ineq} needs jet data")))?;
        let m = if ineq.is_fibered() { field.fiber.len() } else { 0 };
        jets.validate(field.n(), m)?;
        if ineq.is_fibered() && jets.b.is_empty() {
            return Err(Error::Hypothesis("fibred jet versions need the fibre jet b_0".into()));
        }
        if matches!(ineq, Inequality::MixedBoundaryJet | Inequality::MixedBoundaryJetFiber) {
            let p: Vec<f64> = field.factors.iter().map(|f| f.p).collect();
            let adm = jet_admissibility(&p, &jets.beta_tilde)?;
            if !adm.admissible {
                return Err(Error::Hypothesis(format!("Σ (β̃_j + 1)/p_j = {} exceeds 1", adm.sum)));
            }
        }
    }
    Ok(())
}

/// `(lhs constant, rhs constant)`.
pub fn constants(ineq: Inequality, cfg: &TheoremConfig) -> (f64, f64) {
    let field = &cfg.field;
    let n = field.n() as i32;
    let mass = field.c.mass();
    match ineq {
        Inequality::Saitoh => (1.0, PI),
        _ if !ineq.is_distinguished() => (1.0, mass * PI),
        Inequality::Distinguished | Inequality::DistinguishedFiber => (1.0, field.inverse_p_sum() * PI.powi(n - 1)),
        _ => {
            let bt = cfg.jets.as_ref().map(|j| j.beta_tilde.clone()).unwrap_or_default();
            let prod: f64 = bt.iter().map(|&b| b as f64 + 1.0).product();
            let sum: f64 = bt.iter().zip(&field.factors).map(|(&b, f)| (b as f64 + 1.0) / f.p).sum();
            (prod, sum * PI.powi(n - 1))
        }
    }
}

struct Sides {
    lhs: f64,
    rhs: f64,
    basis_dim: usize,
    dropped: usize,
}

/// Kernel (or jet kernel) of one space at its base point, with the rank
/// deficit of the basis used.
fn point_value(spec: &ProductSpaceSpec, ideal: Option<JetIdeal>) -> Result<(f64, usize, usize)> {
    let base = spec.base_point();
    if spec.field.c.is_constant() || spec.measure != Measure::ProductArea {
        let onb = spec.tensor_onb()?;
        let v = match ideal {
            Some(i) => onb.jet_kernel(&i)?.kernel_value,
            None => onb.kernel(&base, &base).re,
        };
        return Ok((v, onb.basis.dim(), onb.dropped));
    }
    let onb = spec.onb(Assembly::Separable)?;
    let v = match ideal {
        Some(i) => constrained_min_norm_onb(&onb, &i)?.kernel_value,
        None => kernel_eval(&onb, &base, &base).re,
    };
    Ok((v, onb.basis.dim(), onb.dropped))
}

fn side(ineq: Inequality, cfg: &TheoremConfig, measure: Measure, res: Resolution) -> Result<(f64, usize, usize)> {
    let spec = ProductSpaceSpec::new(cfg.field.clone(), measure, false, res);
    let jets = cfg.jets.as_ref().filter(|_| ineq.is_jet());
    let ideal = jets.map(|j| j.base_ideal(&spec.base_point())).transpose()?;
    let (mut value, dim, mut dropped) = point_value(&spec, ideal)?;
    if ineq.is_fibered() {
        // Both sides carry the same fibre: the kernel is (base kernel) × (kernel of U).
        let fiber = ProductSpaceSpec::new(cfg.field.clone(), measure, true, res).fiber_space()?;
        let ideal = jets.map(|j| j.fiber_ideal(&fiber.base_point())).transpose()?;
        let (fv, _, fd) = point_value(&fiber, ideal)?;
        value *= fv;
        dropped += fd;
    }
    Ok((value, dim, dropped))
}

fn sides(ineq: Inequality, cfg: &TheoremConfig, res: Resolution) -> Result<Sides> {
    let (big, small) = ineq.measures();
    let (lhs, basis_dim, d1) = side(ineq, cfg, big, res)?;
    let (rhs, _, d2) = side(ineq, cfg, small, res)?;
    Ok(Sides { lhs, rhs, basis_dim, dropped: d1 + d2 })
}

/// Both sides at `cfg.resolution`, plus the doubled resolution when `refine` is set.
pub fn evaluate_with(ineq: Inequality, cfg: &TheoremConfig, refine: bool) -> Result<InequalityReport> {
    check_hypotheses(ineq, cfg)?;
    let (lc, rc) = constants(ineq, cfg);
    let s = sides(ineq, cfg, cfg.resolution)?;
    if !(s.rhs > 0.0) || !s.rhs.is_finite() {
        return Err(Error::Hypothesis(format!("the smaller kernel is not positive at the base point ({:e})", s.rhs)));
    }
    if !s.lhs.is_finite() {
        return Err(Error::Numerical(format!("{ineq}: larger kernel is not finite")));
    }
    let ratio = lc * s.lhs / (rc * s.rhs);
    let refined = if refine {
        let f = sides(ineq, cfg, cfg.resolution.doubled())?;
        Some(lc * f.lhs / (rc * f.rhs))
    } else {
        None
    };
    let tol = cfg.tolerances.equality;
    let verdict = if ratio < 1.0 - tol {
        Verdict::ViolationFlag
    } else if (ratio - 1.0).abs() <= tol {
        Verdict::Equality
    } else {
        Verdict::Strict
    };
    let r = cfg.resolution;
    log::debug!("{ineq}: lhs kernel {:e}, rhs kernel {:e}, ratio {ratio}", s.lhs, s.rhs);
    Ok(InequalityReport {
        theorem: ineq.id().to_string(),
        lhs: lc * s.lhs,
        rhs: rc * s.rhs,
        ratio,
        constant_used: rc,
        lhs_constant: lc,
        lhs_kernel: s.lhs,
        rhs_kernel: s.rhs,
        sizes: Sizes {
            basis_degree: r.basis,
            fiber_degree: r.fiber_basis,
            basis_dim: s.basis_dim,
            boundary_nodes: r.boundary_nodes,
            radial_nodes: r.radial_nodes,
            angular_nodes: r.angular_nodes,
        },
        refinement_delta: refined.map(|x| (x - ratio).abs()),
        refined_ratio: refined,
        verdict,
        dropped_directions: s.dropped,
    })
}

/// [`evaluate_with`] including the refinement pass.
pub fn evaluate(ineq: Inequality, cfg: &TheoremConfig) -> Result<InequalityReport> {
    evaluate_with(ineq, cfg, true)
}
