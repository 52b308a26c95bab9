//! Planar domains and their Green functions.
//!
//! Discs use the Möbius formula. Annuli are reduced to the normalized annulus
//! `q < |ζ| < 1` and use the Schottky–Klein prime function
//!
//! ```text
//! P(ζ) = (1 - ζ) ∏_{k≥1} (1 - q^{2k} ζ)(1 - q^{2k}/ζ)
//! G(z, a) = log|P(z/a)| - log|P(z ā)| + log|a| - log|z| log|a| / log q
//! ```
//!
//! which vanishes on both circles. The product is cut once the tail bound
//! drops below `1e-13`.
//!
//! Gradients are returned as the complex derivative `F'` of a local
//! holomorphic completion `F` of the harmonic function, so the derivative
//! along a unit direction `ν` is `Re(F' ν)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::integration::{boundary_rule, QuadratureRule};
use crate::{Error, Result, C64, TAU};

/// A disc or a round annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Disc { center: C64, radius: f64 },
    Annulus { center: C64, inner: f64, outer: f64 },
}

/// A point on one boundary circle, with its outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub component: usize,
    pub s: f64,
    pub z: C64,
    pub normal: C64,
}

impl Domain {
    pub fn disc(center: C64, radius: f64) -> Result<Self> {
        let d = Domain::Disc { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(center: C64, inner: f64, outer: f64) -> Result<Self> {
        let d = Domain::Annulus { center, inner, outer };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_disc() -> Self {
        Domain::Disc { center: C64::new(0.0, 0.0), radius: 1.0 }
    }

    /// Checks radii and centers; deserialized domains should pass through this.
    pub fn validate(&self) -> Result<()> {
        let ok_center = |c: &C64| c.re.is_finite() && c.im.is_finite();
        match self {
            Domain::Disc { center, radius } => {
                if !ok_center(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("disc radius must be positive, got {radius}")));
                }
            }
            Domain::Annulus { center, inner, outer } => {
                if !ok_center(center) || !(inner.is_finite() && outer.is_finite() && 0.0 < *inner && inner < outer) {
                    return Err(Error::InvalidDomain(format!(
                        "annulus needs 0 < inner < outer, got inner={inner}, outer={outer}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn center(&self) -> C64 {
        match *self {
            Domain::Disc { center, .. } | Domain::Annulus { center, .. } => center,
        }
    }

    pub fn outer_radius(&self) -> f64 {
        match *self {
            Domain::Disc { radius, .. } => radius,
            Domain::Annulus { outer, .. } => outer,
        }
    }

    pub fn inner_radius(&self) -> Option<f64> {
        match *self {
            Domain::Disc { .. } => None,
            Domain::Annulus { inner, .. } => Some(inner),
        }
    }

    /// Modulus `inner / outer` of an annulus.
    pub fn modulus(&self) -> Option<f64> {
        self.inner_radius().map(|r| r / self.outer_radius())
    }

    pub fn component_count(&self) -> usize {
        match self {
            Domain::Disc { .. } => 1,
            Domain::Annulus { .. } => 2,
        }
    }

    /// Radius and orientation (`+1` outer, `-1` inner) of component `k`.
    pub fn circle(&self, k: usize) -> (f64, f64) {
        match (self, k) {
            (_, 0) => (self.outer_radius(), 1.0),
            (Domain::Annulus { inner, .. }, 1) => (*inner, -1.0),
            _ => panic!("domain has no boundary component {k}"),
        }
    }

    pub fn boundary_point(&self, component: usize, s: f64) -> BoundaryPoint {
        let (r, orientation) = self.circle(component);
        let e = C64::from_polar(1.0, s);
        BoundaryPoint { component, s, z: self.center() + e * r, normal: e * orientation }
    }

    /// The boundary point on the circle nearest to `z`.
    pub fn boundary_point_at(&self, z: C64) -> BoundaryPoint {
        let d = z - self.center();
        let s = d.arg();
        let r = d.norm();
        let component = match self.inner_radius() {
            Some(ri) if (r - ri).abs() < (r - self.outer_radius()).abs() => 1,
            _ => 0,
        };
        let mut b = self.boundary_point(component, s);
        b.z = z;
        b
    }

    /// Signed distance to the boundary, positive inside.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        let r = (z - self.center()).norm();
        match *self {
            Domain::Disc { radius, .. } => radius - r,
            Domain::Annulus { inner, outer, .. } => (outer - r).min(r - inner),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        self.boundary_distance(z) > 0.0
    }

    pub fn area(&self) -> f64 {
        let r_in = self.inner_radius().unwrap_or(0.0);
        0.5 * TAU * (self.outer_radius().powi(2) - r_in * r_in)
    }

    fn scale(&self) -> f64 {
        self.outer_radius()
    }

    fn check_closed(&self, z: C64) -> Result<()> {
        if self.boundary_distance(z) < -1e-12 * self.scale() || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::OutsideDomain(z));
        }
        Ok(())
    }

    fn check_interior(&self, t: C64) -> Result<()> {
        if self.boundary_distance(t) <= 0.0 || !t.re.is_finite() || !t.im.is_finite() {
            return Err(Error::OutsideDomain(t));
        }
        Ok(())
    }
}

/// Number of factors kept in the prime-function product for modulus `q`.
///
/// For `q < |ζ| < 1/q` every factor with index `k` is within `q^{2k-2}` of 1,
/// and `|log(1-x)| <= |x|/(1-|x|)`, so the tail after `K` factors is at most
/// `8 q^{2K} / ((1 - q^2)(1 - q^{2K}))`.
pub fn prime_terms(q: f64) -> usize {
    let mut k = 2usize;
    loop {
        let qk = q.powi(2 * k as i32);
        if 8.0 * qk / ((1.0 - q * q) * (1.0 - qk)) < 1e-13 || k > 5000 {
            return k;
        }
        k += 1;
    }
}

fn prime_log_abs(zeta: C64, q: f64, terms: usize) -> f64 {
    let one = C64::new(1.0, 0.0);
    let mut s = (one - zeta).norm().ln();
    let q2 = q * q;
    let mut qk = 1.0;
    for _ in 0..terms {
        qk *= q2;
        s += (one - zeta * qk).norm().ln() + (one - zeta.inv() * qk).norm().ln();
    }
    s
}

fn prime_dlog(zeta: C64, q: f64, terms: usize) -> C64 {
    let one = C64::new(1.0, 0.0);
    let mut s = -(one - zeta).inv();
    let q2 = q * q;
    let inv = zeta.inv();
    let mut qk = 1.0;
    for _ in 0..terms {
        qk *= q2;
        s += -qk / (one - zeta * qk) + (inv * inv * qk) / (one - inv * qk);
    }
    s
}

/// Green function `G(z, t)`, zero on the boundary and `log|z - t| + O(1)` at `t`.
pub fn green(domain: &Domain, z: C64, t: C64) -> Result<f64> {
    domain.check_closed(z)?;
    domain.check_interior(t)?;
    if (z - t).norm() < 1e-14 * domain.scale() {
        return Err(Error::Singular(t));
    }
    let c = domain.center();
    let r = domain.outer_radius();
    let w = (z - c) / r;
    let tau = (t - c) / r;
    match domain.modulus() {
        None => {
            let one = C64::new(1.0, 0.0);
            Ok((w - tau).norm().ln() - (one - w * tau.conj()).norm().ln())
        }
        Some(q) => {
            let k = prime_terms(q);
            let lt = tau.norm().ln();
            Ok(prime_log_abs(w / tau, q, k) - prime_log_abs(w * tau.conj(), q, k) + lt
                - w.norm().ln() * lt / q.ln())
        }
    }
}

/// Complex gradient `F'(z)` of `G(·, t)`; `∂G/∂v = Re(F'(z) v)`.
pub fn green_gradient(domain: &Domain, z: C64, t: C64) -> Result<C64> {
    domain.check_closed(z)?;
    domain.check_interior(t)?;
    if (z - t).norm() < 1e-14 * domain.scale() {
        return Err(Error::Singular(t));
    }
    let c = domain.center();
    let r = domain.outer_radius();
    let w = (z - c) / r;
    let tau = (t - c) / r;
    let d = match domain.modulus() {
        None => {
            let one = C64::new(1.0, 0.0);
            (w - tau).inv() + tau.conj() / (one - w * tau.conj())
        }
        Some(q) => {
            let k = prime_terms(q);
            let lt = tau.norm().ln();
            prime_dlog(w / tau, q, k) / tau - prime_dlog(w * tau.conj(), q, k) * tau.conj()
                - w.inv() * (lt / q.ln())
        }
    };
    Ok(d / r)
}

/// Outward normal derivative `∂G(·, t)/∂ν` at a boundary point.
///
/// Logs a warning when `t` is so close to the boundary that the reciprocal
/// of this quantity, used as a boundary weight, becomes badly scaled.
pub fn green_normal(domain: &Domain, b: &BoundaryPoint, t: C64) -> Result<f64> {
    if domain.boundary_distance(t) < 1e-3 * domain.scale() {
        warn!("pole {t} is within 1e-3 of the boundary; normal derivative is ill-conditioned");
    }
    Ok((green_gradient(domain, b.z, t)? * b.normal).re)
}

/// Harmonic measure of the inner circle seen from `t`, for annuli.
///
/// This is also the flux of `G(·, t)` through the inner circle divided by `2π`.
pub fn harmonic_measure_inner(domain: &Domain, t: C64) -> Option<f64> {
    let q = domain.modulus()?;
    let rho = (t - domain.center()).norm() / domain.outer_radius();
    Some(rho.ln() / q.ln())
}

/// `(1/2π) ∮ f ∂G(·,t)/∂ν ds` over a boundary rule, given the values of `f`
/// at the rule nodes. For a holomorphic `f` this reproduces `f(t)`.
pub fn poisson_reproduce(domain: &Domain, rule: &QuadratureRule, values: &[C64], t: C64) -> Result<C64> {
    if !rule.is_boundary() || values.len() != rule.len() {
        return Err(Error::Dimension(format!(
            "need one value per boundary node ({} nodes, {} values)",
            rule.len(),
            values.len()
        )));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let z = rule.point(i)[0];
        let dn = (green_gradient(domain, z, t)? * rule.normal(i).unwrap()).re;
        acc += v * (dn * rule.weight(i));
    }
    Ok(acc / TAU)
}

/// `coeff · G(·, pole)` or `coeff · log|z - pole|`, depending on where it is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleTerm {
    pub pole: C64,
    pub coeff: f64,
}

/// A real potential on a domain:
///
/// `u(z) = Σ a_k G(z, t_k) + Σ b_k log|z - s_k| + Re Σ c_k z^k`.
///
/// Green poles `t_k` lie inside the domain, logarithmic poles `s_k` outside its
/// closure (for an annulus, usually in the hole). With nonnegative Green
/// coefficients the potential is subharmonic; without Green terms it is
/// harmonic on the domain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Potential {
    pub green: Vec<PoleTerm>,
    pub log: Vec<PoleTerm>,
    pub poly: Vec<C64>,
}

impl Potential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(a: f64) -> Self {
        Self { poly: vec![C64::new(a, 0.0)], ..Self::default() }
    }

    pub fn with_green(mut self, pole: C64, coeff: f64) -> Self {
        self.green.push(PoleTerm { pole, coeff });
        self
    }

    pub fn with_log(mut self, pole: C64, coeff: f64) -> Self {
        self.log.push(PoleTerm { pole, coeff });
        self
    }

    pub fn with_poly(mut self, coeffs: Vec<C64>) -> Self {
        self.poly = coeffs;
        self
    }

    /// Adds `alpha` to the constant term.
    pub fn shifted(mut self, alpha: f64) -> Self {
        if self.poly.is_empty() {
            self.poly.push(C64::new(0.0, 0.0));
        }
        self.poly[0] += alpha;
        self
    }

    pub fn is_harmonic(&self) -> bool {
        self.green.iter().all(|g| g.coeff == 0.0)
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for g in &self.green {
            if !domain.contains(g.pole) || !g.coeff.is_finite() {
                return Err(Error::Weight(format!("Green pole {} must lie inside the domain", g.pole)));
            }
        }
        for l in &self.log {
            if domain.boundary_distance(l.pole) > -1e-9 * domain.outer_radius() {
                return Err(Error::Weight(format!("log pole {} must lie off the closed domain", l.pole)));
            }
            if !l.coeff.is_finite() {
                return Err(Error::Weight("non-finite log coefficient".into()));
            }
        }
        if self.poly.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Weight("non-finite polynomial coefficient".into()));
        }
        Ok(())
    }

    /// Whether every Green coefficient is nonnegative.
    pub fn is_subharmonic(&self) -> bool {
        self.green.iter().all(|g| g.coeff >= 0.0)
    }

    /// Lelong number at `z0`: the total Green coefficient sitting at `z0`.
    pub fn lelong(&self, z0: C64) -> f64 {
        self.green.iter().filter(|g| (g.pole - z0).norm() < 1e-12).map(|g| g.coeff).sum()
    }

    /// Value at `z`; `±∞` exactly at a Green pole.
    pub fn value(&self, domain: &Domain, z: C64) -> Result<f64> {
        let mut u = 0.0;
        for g in &self.green {
            if (z - g.pole).norm() < 1e-14 {
                return Ok(if g.coeff > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY });
            }
            if g.coeff != 0.0 {
                u += g.coeff * green(domain, z, g.pole)?;
            }
        }
        for l in &self.log {
            u += l.coeff * (z - l.pole).norm().ln();
        }
        let mut zk = C64::new(1.0, 0.0);
        for c in &self.poly {
            u += (c * zk).re;
            zk *= z;
        }
        Ok(u)
    }

    /// Complex gradient, so that `∂u/∂v = Re(gradient · v)`.
    pub fn gradient(&self, domain: &Domain, z: C64) -> Result<C64> {
        let mut d = C64::new(0.0, 0.0);
        for g in &self.green {
            if g.coeff != 0.0 {
                d += green_gradient(domain, z, g.pole)? * g.coeff;
            }
        }
        for l in &self.log {
            d += (z - l.pole).inv() * l.coeff;
        }
        let mut zk = C64::new(1.0, 0.0);
        for (k, c) in self.poly.iter().enumerate().skip(1) {
            d += c * zk * k as f64;
            zk *= z;
        }
        Ok(d)
    }
}

/// Flux `∮ ∂u/∂ν ds` of a potential through one boundary component,
/// with `n` trapezoid nodes (at least 8).
pub fn harmonic_flux(domain: &Domain, u: &Potential, component: usize, n: usize) -> Result<f64> {
    if component >= domain.component_count() {
        return Err(Error::InvalidDomain(format!("no boundary component {component}")));
    }
    let rule = boundary_rule(domain, n)?;
    let mut flux = 0.0;
    for i in 0..rule.len() {
        if rule.component(i) != Some(component) {
            continue;
        }
        flux += (u.gradient(domain, rule.point(i)[0])? * rule.normal(i).unwrap()).re * rule.weight(i);
    }
    Ok(flux)
}

/// The exhaustion values `v_k` and their boundary limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExhaustionSequence {
    pub k: Vec<u64>,
    pub values: Vec<f64>,
    pub limit: f64,
}

const EXHAUSTION_NODES: usize = 512;

/// Squared `H^2` norms of `f` on the sublevel sets `D_k = {G(·,t) < log(1 - 1/k)}`,
///
/// `v_k = (1/2π) ∮_{∂D_k} |f|^2 ∂G/∂ν ds`,
///
/// for `levels` doubling values of `k`, together with the limit on `∂D`.
///
/// On a disc the level curves are Möbius images of circles. On an annulus
/// they are traced ray by ray about the center; the first `k` is the smallest
/// power of two for which `D_k` is bounded by two closed curves.
pub fn hardy_norm_exhaustion(
    domain: &Domain,
    f: &dyn Fn(C64) -> C64,
    t: C64,
    levels: usize,
) -> Result<ExhaustionSequence> {
    domain.check_interior(t)?;
    let limit = {
        let rule = boundary_rule(domain, 2 * EXHAUSTION_NODES)?;
        let mut acc = 0.0;
        for i in 0..rule.len() {
            let z = rule.point(i)[0];
            let dn = (green_gradient(domain, z, t)? * rule.normal(i).unwrap()).re;
            acc += f(z).norm_sqr() * dn * rule.weight(i);
        }
        acc / TAU
    };
    let mut ks = Vec::with_capacity(levels);
    let mut values = Vec::with_capacity(levels);
    match domain.modulus() {
        None => {
            let c = domain.center();
            let r = domain.outer_radius();
            let tau = (t - c) / r;
            let one = C64::new(1.0, 0.0);
            for i in 0..levels {
                let k = 2u64 << i;
                let s = 1.0 - 1.0 / k as f64;
                let h = TAU / EXHAUSTION_NODES as f64;
                let v: f64 = (0..EXHAUSTION_NODES)
                    .map(|j| {
                        let w = C64::from_polar(s, h * j as f64);
                        f(c + (w + tau) / (one + tau.conj() * w) * r).norm_sqr()
                    })
                    .sum::<f64>()
                    * h
                    / TAU;
                ks.push(k);
                values.push(v);
            }
        }
        Some(_) => {
            let mut k = 2u64;
            while level_curves(domain, t, k).is_err() {
                k *= 2;
                if k > 1 << 40 {
                    return Err(Error::LevelSet { level: (1.0 - 1.0 / k as f64).ln() });
                }
            }
            for _ in 0..levels {
                let curves = level_curves(domain, t, k)?;
                let h = TAU / EXHAUSTION_NODES as f64;
                let mut acc = 0.0;
                for (curve, sign) in curves.iter().zip([-1.0, 1.0]) {
                    for p in curve {
                        let flux = (p.gradient * p.tangent * C64::new(0.0, sign)).re;
                        acc += f(p.z).norm_sqr() * flux * h;
                    }
                }
                ks.push(k);
                values.push(acc / TAU);
                k *= 2;
            }
        }
    }
    Ok(ExhaustionSequence { k: ks, values, limit })
}

struct CurvePoint {
    z: C64,
    tangent: C64,
    gradient: C64,
}

/// Outer and inner level curves of `G(·, t) = log(1 - 1/k)` on an annulus,
/// sampled at equispaced angles about the center.
fn level_curves(domain: &Domain, t: C64, k: u64) -> Result<[Vec<CurvePoint>; 2]> {
    let level = (1.0 - 1.0 / k as f64).ln();
    let c = domain.center();
    let r_out = domain.outer_radius();
    let r_in = domain.inner_radius().expect("annulus");
    let g = |r: f64, th: f64| green(domain, c + C64::from_polar(r, th), t);
    let h = TAU / EXHAUSTION_NODES as f64;
    const SAMPLES: usize = 256;
    let mut outer = Vec::with_capacity(EXHAUSTION_NODES);
    let mut inner = Vec::with_capacity(EXHAUSTION_NODES);
    for j in 0..EXHAUSTION_NODES {
        let th = h * j as f64;
        // Sample the ray; the set {G < level} must be one interval.
        let radii: Vec<f64> =
            (1..SAMPLES).map(|i| r_in + (r_out - r_in) * i as f64 / SAMPLES as f64).collect();
        let mut below = Vec::with_capacity(radii.len());
        for &r in &radii {
            let v = match g(r, th) {
                Ok(v) => v,
                Err(Error::Singular(_)) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            below.push(v < level);
        }
        let first = below.iter().position(|&b| b).ok_or(Error::LevelSet { level })?;
        let last = below.iter().rposition(|&b| b).unwrap();
        if below[first..=last].iter().any(|&b| !b) {
            return Err(Error::LevelSet { level });
        }
        let lo = if first == 0 { r_in } else { radii[first - 1] };
        let r1 = bisect(|r| g(r, th).map(|v| v - level), lo, radii[first])?;
        let hi = if last + 1 == radii.len() { r_out } else { radii[last + 1] };
        let r2 = bisect(|r| g(r, th).map(|v| v - level), radii[last], hi)?;
        for (r, out) in [(r2, &mut outer), (r1, &mut inner)] {
            let e = C64::from_polar(1.0, th);
            let z = c + e * r;
            let gradient = green_gradient(domain, z, t)?;
            let g_r = (gradient * e).re;
            let g_th = (gradient * e * C64::new(0.0, r)).re;
            let dr = -g_th / g_r;
            let tangent = (C64::new(dr, r)) * e;
            out.push(CurvePoint { z, tangent, gradient });
        }
    }
    Ok([outer, inner])
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let fa = f(a)?;
    let sa = fa > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) < 1e-15 * b.abs().max(1.0) {
            break;
        }
        if (f(m)? > 0.0) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
