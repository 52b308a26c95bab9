//! Weight fields.
//!
//! A weight field bundles the data a theorem needs on a domain `D` or a product
//! `M = D_1 × ... × D_n`, optionally fibred over `U`:
//!
//! * base points `z_j` and exponents `p_j`,
//! * subharmonic potentials `φ_j` on each factor,
//! * a profile `c(t)` with `c(t) e^{-t}` decreasing and `c(0) = 1`,
//! * a fibre weight `γ(u) = scale · ∏ e^{-φ_U,i(u_i)}`.
//!
//! From these it derives the pole function `ψ` and the boundary and interior
//! weights. On a single domain `ψ = p G(·, z_0)`; on products
//! `ψ = max_j 2 p_j G_j(·, z_j)`.

use serde::{Deserialize, Serialize};

use crate::geometry::{green, green_gradient, BoundaryPoint, Domain, Potential};
use crate::integration::{half_line_integral, QuadratureRule};
use crate::{Error, Result, C64};

/// The profile `c(t)` on `[0, ∞)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CFunction {
    /// `c ≡ 1`.
    #[default]
    One,
    /// `c(t) = e^{-ε t}` with `ε > -1`.
    ExpDecay { eps: f64 },
}

impl CFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CFunction::One => Ok(()),
            CFunction::ExpDecay { eps } if eps.is_finite() && eps > -1.0 => Ok(()),
            CFunction::ExpDecay { eps } => Err(Error::Weight(format!(
                "c(t) = exp(-{eps} t) makes c(t)e^-t non-decreasing or non-integrable"
            ))),
        }
    }

    /// `c(t)`, including the limit `t = +∞`.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            CFunction::One => 1.0,
            CFunction::ExpDecay { eps } if t == f64::INFINITY => {
                if eps > 0.0 {
                    0.0
                } else if eps == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            CFunction::ExpDecay { eps } => (-eps * t).exp(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CFunction::One | CFunction::ExpDecay { eps: 0.0 })
    }

    /// `∫_0^∞ c(t) e^{-t} dt` in closed form.
    pub fn mass(&self) -> f64 {
        match *self {
            CFunction::One => 1.0,
            CFunction::ExpDecay { eps } => 1.0 / (1.0 + eps),
        }
    }

    /// The same integral by quadrature.
    pub fn numeric_mass(&self) -> f64 {
        half_line_integral(|t| self.eval(t) * (-t).exp())
    }
}

/// How `ψ` is built from the Green functions of the factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiForm {
    /// One domain, `ψ = p G(·, z_0)`, interior weight `e^{-φ} c(-2ψ)`.
    Planar,
    /// Products, `ψ = max 2 p_j G_j`, interior weight `c(-ψ) ∏ e^{-φ_j}`.
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFactor {
    pub domain: Domain,
    pub base_point: C64,
    pub p: f64,
    #[serde(default)]
    pub phi: Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberFactor {
    pub domain: Domain,
    pub base_point: C64,
    #[serde(default)]
    pub phi: Potential,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightField {
    pub form: PsiForm,
    pub factors: Vec<WeightFactor>,
    #[serde(default)]
    pub c: CFunction,
    #[serde(default)]
    pub fiber: Vec<FiberFactor>,
    #[serde(default = "one")]
    pub gamma_scale: f64,
}

impl WeightFactor {
    pub fn new(domain: Domain, base_point: C64, p: f64) -> Self {
        Self { domain, base_point, p, phi: Potential::zero() }
    }

    pub fn with_phi(mut self, phi: Potential) -> Self {
        self.phi = phi;
        self
    }
}

impl FiberFactor {
    pub fn new(domain: Domain, base_point: C64) -> Self {
        Self { domain, base_point, phi: Potential::zero() }
    }

    pub fn with_phi(mut self, phi: Potential) -> Self {
        self.phi = phi;
        self
    }
}

impl WeightField {
    /// Single-domain field with `φ = 0` and `c ≡ 1`.
    pub fn planar(domain: Domain, base_point: C64, p: f64) -> Self {
        Self {
            form: PsiForm::Planar,
            factors: vec![WeightFactor::new(domain, base_point, p)],
            c: CFunction::One,
            fiber: Vec::new(),
            gamma_scale: 1.0,
        }
    }

    pub fn product(factors: Vec<WeightFactor>) -> Self {
        Self { form: PsiForm::Product, factors, c: CFunction::One, fiber: Vec::new(), gamma_scale: 1.0 }
    }

    pub fn with_c(mut self, c: CFunction) -> Self {
        self.c = c;
        self
    }

    pub fn with_fiber(mut self, fiber: Vec<FiberFactor>) -> Self {
        self.fiber = fiber;
        self
    }

    pub fn with_gamma_scale(mut self, s: f64) -> Self {
        self.gamma_scale = s;
        self
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn base_point(&self) -> Vec<C64> {
        self.factors.iter().map(|f| f.base_point).collect()
    }

    pub fn fiber_base_point(&self) -> Vec<C64> {
        self.fiber.iter().map(|f| f.base_point).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::Weight("at least one factor domain is required".into()));
        }
        if self.form == PsiForm::Planar && self.factors.len() != 1 {
            return Err(Error::Weight("the planar form takes exactly one domain".into()));
        }
        self.c.validate()?;
        for f in &self.factors {
            f.domain.validate()?;
            if !f.domain.contains(f.base_point) {
                return Err(Error::OutsideDomain(f.base_point));
            }
            if !(f.p.is_finite() && f.p > 0.0) {
                return Err(Error::Weight(format!("exponent p must be positive, got {}", f.p)));
            }
            f.phi.validate(&f.domain)?;
            // On one domain only φ + 2ψ = φ + 2p G(·, z_0) has to be subharmonic.
            let slack = if self.form == PsiForm::Planar { 2.0 * f.p } else { 0.0 };
            let ok = f.phi.green.iter().all(|g| {
                let at_base = (g.pole - f.base_point).norm() < 1e-12;
                g.coeff >= 0.0 || (at_base && f.phi.lelong(f.base_point) + slack >= 0.0)
            });
            if !ok {
                return Err(Error::Weight("φ + 2ψ is not subharmonic: negative Green coefficient".into()));
            }
        }
        for f in &self.fiber {
            f.domain.validate()?;
            if !f.domain.contains(f.base_point) {
                return Err(Error::OutsideDomain(f.base_point));
            }
            f.phi.validate(&f.domain)?;
            if !f.phi.is_subharmonic() {
                return Err(Error::Weight("fibre potential has a negative Green coefficient".into()));
            }
        }
        if !(self.gamma_scale.is_finite() && self.gamma_scale > 0.0) {
            return Err(Error::Weight("γ scale must be positive".into()));
        }
        Ok(())
    }

    fn check_len(&self, w: &[C64]) -> Result<()> {
        if w.len() != self.factors.len() {
            return Err(Error::Dimension(format!("expected {} coordinates, got {}", self.factors.len(), w.len())));
        }
        Ok(())
    }

    /// `ψ(w)`, `-∞` at the base point.
    pub fn psi(&self, w: &[C64]) -> Result<f64> {
        self.check_len(w)?;
        let mut best = f64::NEG_INFINITY;
        for (f, &wj) in self.factors.iter().zip(w) {
            let g = match green(&f.domain, wj, f.base_point) {
                Ok(g) => g,
                Err(Error::Singular(_)) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            let v = match self.form {
                PsiForm::Planar => f.p * g,
                PsiForm::Product => 2.0 * f.p * g,
            };
            best = best.max(v);
        }
        Ok(best)
    }

    /// `Σ φ_j(w_j)`.
    pub fn phi(&self, w: &[C64]) -> Result<f64> {
        self.check_len(w)?;
        let mut s = 0.0;
        for (f, &wj) in self.factors.iter().zip(w) {
            s += f.phi.value(&f.domain, wj)?;
        }
        Ok(s)
    }

    /// Interior weight: `e^{-φ} c(-2ψ)` on one domain, `c(-ψ) ∏ e^{-φ_j}` on products.
    pub fn rho(&self, w: &[C64]) -> Result<f64> {
        if self.c.is_constant() {
            return Ok((-self.phi(w)?).exp());
        }
        let psi = self.psi(w)?;
        let arg = match self.form {
            PsiForm::Planar => -2.0 * psi,
            PsiForm::Product => -psi,
        };
        Ok((-self.phi(w)?).exp() * self.c.eval(arg))
    }

    /// `e^{-φ_j(w)}` on factor `j`.
    pub fn factor_weight(&self, j: usize, w: C64) -> Result<f64> {
        let f = &self.factors[j];
        Ok((-f.phi.value(&f.domain, w)?).exp())
    }

    /// `∂G_j(·, z_j)/∂ν` at a boundary point of factor `j`.
    pub fn normal_derivative(&self, j: usize, b: &BoundaryPoint) -> Result<f64> {
        let f = &self.factors[j];
        Ok((green_gradient(&f.domain, b.z, f.base_point)? * b.normal).re)
    }

    /// `(∂G_j/∂ν)^{-1} e^{-φ_j}` at a boundary point of factor `j`.
    pub fn boundary_factor(&self, j: usize, b: &BoundaryPoint) -> Result<f64> {
        let dn = self.normal_derivative(j, b)?;
        if dn <= 0.0 {
            return Err(Error::Numerical(format!("non-positive normal derivative {dn:e} at {}", b.z)));
        }
        Ok(self.factor_weight(j, b.z)? / dn)
    }

    /// Planar boundary weight `λ = ρ (∂ψ/∂ν)^{-1} = e^{-φ} / (p ∂G/∂ν)`;
    /// `ψ` vanishes on the boundary, so `c(-2ψ) = c(0) = 1` there.
    pub fn planar_boundary_weight(&self, b: &BoundaryPoint) -> Result<f64> {
        Ok(self.boundary_factor(0, b)? / self.factors[0].p)
    }

    /// Weight on `∂D_j × M_j`: `(1/p_j)(∂G_j/∂ν)^{-1} ∏_l e^{-φ_l(w_l)}`,
    /// where `w` is the full point and `w_j = b.z`.
    pub fn mixed_boundary_weight(&self, j: usize, b: &BoundaryPoint, w: &[C64]) -> Result<f64> {
        self.check_len(w)?;
        let mut s = self.boundary_factor(j, b)? / self.factors[j].p;
        for (l, &wl) in w.iter().enumerate() {
            if l != j {
                s *= self.factor_weight(l, wl)?;
            }
        }
        Ok(s)
    }

    /// Weight on the distinguished boundary `∏ (∂G_j/∂ν)^{-1} e^{-φ_j}`.
    pub fn distinguished_weight(&self, b: &[BoundaryPoint]) -> Result<f64> {
        self.check_len(&b.iter().map(|x| x.z).collect::<Vec<_>>())?;
        let mut s = 1.0;
        for (j, bj) in b.iter().enumerate() {
            s *= self.boundary_factor(j, bj)?;
        }
        Ok(s)
    }

    /// `e^{-φ_U,i(u)}` on fibre coordinate `i`.
    pub fn fiber_factor_weight(&self, i: usize, u: C64) -> Result<f64> {
        let f = &self.fiber[i];
        Ok((-f.phi.value(&f.domain, u)?).exp())
    }

    /// `γ(u)`.
    pub fn gamma(&self, u: &[C64]) -> Result<f64> {
        if u.len() != self.fiber.len() {
            return Err(Error::Dimension(format!("expected {} fibre coordinates, got {}", self.fiber.len(), u.len())));
        }
        let mut s = self.gamma_scale;
        for (i, &ui) in u.iter().enumerate() {
            s *= self.fiber_factor_weight(i, ui)?;
        }
        Ok(s)
    }

    /// Lelong number of `φ + 2ψ` at the base point (single domain).
    pub fn lelong_number(&self) -> f64 {
        let f = &self.factors[0];
        f.phi.lelong(f.base_point) + 2.0 * f.p
    }

    /// `Σ 1/p_j`.
    pub fn inverse_p_sum(&self) -> f64 {
        self.factors.iter().map(|f| 1.0 / f.p).sum()
    }
}

/// Result of [`jet_admissibility`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JetAdmissibility {
    pub sum: f64,
    pub admissible: bool,
    /// The box corner itself lies on `Σ (α_j + 1)/p_j = 1`.
    pub on_boundary: bool,
}

/// `Σ (β̃_j + 1)/p_j <= 1`: the box ideal below `β̃` then contains the
/// multiplier ideal of `ψ`.
pub fn jet_admissibility(p: &[f64], beta_tilde: &[u32]) -> Result<JetAdmissibility> {
    if p.len() != beta_tilde.len() || p.is_empty() {
        return Err(Error::Dimension(format!("{} exponents for {} orders", p.len(), beta_tilde.len())));
    }
    let sum: f64 = p.iter().zip(beta_tilde).map(|(pj, b)| (*b as f64 + 1.0) / pj).sum();
    Ok(JetAdmissibility { sum, admissible: sum <= 1.0 + 1e-12, on_boundary: (sum - 1.0).abs() <= 1e-12 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub exponent: f64,
    /// `∫ weight^{-a}` on each rule of the refinement ladder.
    pub integrals: Vec<f64>,
    pub pass: bool,
}

/// Advisory check that `weight^{-a}` is locally integrable.
///
/// `rules` should be a ladder of refinements of one area rule. The check
/// passes when every integral is finite, below `1e12`, and the last two
/// agree to 10%; a blow-up along the ladder signals divergence.
pub fn admissibility_check(
    weight: &dyn Fn(&[C64]) -> f64,
    rules: &[QuadratureRule],
    a: f64,
) -> Result<AdmissibilityReport> {
    if rules.len() < 2 {
        return Err(Error::Quadrature("admissibility needs at least two refinements".into()));
    }
    let integrals: Vec<f64> = rules.iter().map(|r| r.integrate_real(|z| weight(z).powf(-a))).collect();
    let finite = integrals.iter().all(|v| v.is_finite() && *v < 1e12);
    let n = integrals.len();
    let stable = finite && (integrals[n - 1] - integrals[n - 2]).abs() <= 0.1 * integrals[n - 1].abs();
    Ok(AdmissibilityReport { exponent: a, integrals, pass: stable })
}
