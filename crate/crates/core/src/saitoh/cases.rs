//! Equality-case constructions and strictness probes.
//!
//! On an annulus the character condition is tested through fluxes: the
//! multiplicative function of `G(·, z_0)` and that of a harmonic `-u` have
//! the same character when their fluxes through the inner circle agree
//! modulo `2π`. The harmonic catalog here is `u = a log|z - c|`, whose flux
//! can be tuned continuously, and `u = Re(polynomial)`, whose flux is zero.

use serde::{Deserialize, Serialize};

use super::{evaluate_with, Inequality, InequalityReport, TheoremConfig};
use crate::geometry::{harmonic_flux, Domain, Potential};
use crate::weights::{jet_admissibility, WeightFactor, WeightField};
use crate::{Error, Result, C64, TAU};

/// Nodes of the trapezoid rule used to certify fluxes.
const FLUX_NODES: usize = 512;
/// Flux gaps (mod 2π) below this count as a match.
const FLUX_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarmonicFamily {
    /// `u = a log|z - c|` with `c` the centre of the annulus.
    LogPotential,
    /// `u = Re Σ c_k z^k`; zero flux through every circle.
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EqualityCase {
    pub field: WeightField,
    /// Per factor, `|m Φ(G) − Φ(−u)|` reduced mod 2π (0 on discs).
    pub flux_gaps: Vec<f64>,
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    r.min(TAU - r)
}

/// Flux through the inner circle of `G(·, z0)` scaled by `m`, minus that of `-u`, mod 2π.
pub fn flux_gap(domain: &Domain, z0: C64, m: f64, u: &Potential) -> Result<f64> {
    if domain.component_count() < 2 {
        return Ok(0.0);
    }
    let g = Potential::zero().with_green(z0, 1.0);
    let fg = harmonic_flux(domain, &g, 1, FLUX_NODES)?;
    let fu = harmonic_flux(domain, u, 1, FLUX_NODES)?;
    Ok(wrap(m * fg + fu))
}

/// `ω(z0) = log(|z0 - c|/R) / log q`, the harmonic measure of the inner circle.
fn inner_measure(domain: &Domain, z0: C64) -> f64 {
    match (domain.modulus(), domain.inner_radius()) {
        (Some(q), Some(_)) => ((z0 - domain.center()).norm() / domain.outer_radius()).ln() / q.ln(),
        _ => 0.0,
    }
}

/// A weight field satisfying the equality conditions of `ineq`.
///
/// `p` holds the exponents (one per domain; the single entry is `p_0` for the
/// planar theorems). For the jet theorems the character exponent of factor
/// `j` is `β̃_j + 1`, otherwise 1. The fibre, if any, is left to the caller.
pub fn equality_case_config(
    ineq: Inequality,
    domains: &[Domain],
    base: &[C64],
    p: &[f64],
    beta_tilde: Option<&[u32]>,
    family: HarmonicFamily,
) -> Result<EqualityCase> {
    if domains.len() != base.len() || domains.len() != p.len() || domains.is_empty() {
        return Err(Error::Dimension("one base point and one exponent per domain".into()));
    }
    if ineq.is_jet() && beta_tilde.map(|b| b.len()) != Some(domains.len()) {
        return Err(Error::Dimension("jet versions need β̃ for every factor".into()));
    }
    match ineq {
        Inequality::MixedBoundary | Inequality::MixedBoundaryFiber => {
            let s: f64 = p.iter().map(|x| 1.0 / x).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Hypothesis(format!("equality needs Σ 1/p_j = 1, got {s}")));
            }
        }
        Inequality::MixedBoundaryJet | Inequality::MixedBoundaryJetFiber => {
            let adm = jet_admissibility(p, beta_tilde.unwrap_or_default())?;
            if !adm.on_boundary {
                return Err(Error::Hypothesis(format!("equality needs Σ (β̃_j + 1)/p_j = 1, got {}", adm.sum)));
            }
        }
        _ => {}
    }
    let mut factors = Vec::with_capacity(domains.len());
    let mut gaps = Vec::with_capacity(domains.len());
    for (j, (d, &z0)) in domains.iter().zip(base).enumerate() {
        d.validate()?;
        let m = beta_tilde.map(|b| b[j] as f64 + 1.0).unwrap_or(1.0);
        // φ_j = 2u with -u sharing the character of G(·, z_j)^m.
        let u = match (family, d.inner_radius()) {
            (HarmonicFamily::LogPotential, Some(_)) => Potential::zero().with_log(d.center(), m * inner_measure(d, z0)),
            _ => Potential::zero(),
        };
        let gap = flux_gap(d, z0, m, &u)?;
        if gap > FLUX_TOL {
            return Err(Error::FluxMismatch { gap });
        }
        gaps.push(gap);
        let mut phi = Potential::zero();
        for t in &u.log {
            phi = phi.with_log(t.pole, 2.0 * t.coeff);
        }
        if ineq.is_planar() && p[j] != 1.0 {
            // φ + 2ψ = 2G + 2u with ψ = p_0 G.
            phi = phi.with_green(z0, 2.0 * (1.0 - p[j]));
        }
        factors.push(WeightFactor::new(*d, z0, p[j]).with_phi(phi));
    }
    let field = if ineq.is_planar() {
        if factors.len() != 1 {
            return Err(Error::Dimension(format!("{ineq} takes one domain")));
        }
        let mut field = WeightField::planar(domains[0], base[0], p[0]);
        field.factors = factors;
        field
    } else {
        WeightField::product(factors)
    };
    field.validate()?;
    Ok(EqualityCase { field, flux_gaps: gaps })
}

/// A single change to a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Perturbation {
    /// Adds `delta` to every exponent `p_j` (to `p_0` on one domain), leaving `φ` alone.
    Exponent { delta: f64 },
    /// Adds `2δ log|z - c|` to `φ_0` on an annulus, `2δ Re z` on a disc.
    HarmonicCoefficient { delta: f64 },
    /// Adds `2 · amount · G(·, pole)` to `φ_0`.
    GreenBump { pole: C64, amount: f64 },
}

impl Perturbation {
    pub fn apply(&self, field: &WeightField) -> WeightField {
        let mut f = field.clone();
        match *self {
            Perturbation::Exponent { delta } => f.factors.iter_mut().for_each(|x| x.p += delta),
            Perturbation::HarmonicCoefficient { delta } => {
                let x = &mut f.factors[0];
                let c = x.domain.center();
                if x.domain.inner_radius().is_some() {
                    x.phi = x.phi.clone().with_log(c, 2.0 * delta);
                } else {
                    let mut poly = x.phi.poly.clone();
                    poly.resize(poly.len().max(2), C64::new(0.0, 0.0));
                    poly[1] += 2.0 * delta;
                    x.phi.poly = poly;
                }
            }
            Perturbation::GreenBump { pole, amount } => {
                let x = &mut f.factors[0];
                x.phi = x.phi.clone().with_green(pole, 2.0 * amount);
            }
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub base: InequalityReport,
    pub perturbed: InequalityReport,
    /// `ratio(perturbed) − ratio(base)`.
    pub departure: f64,
}

/// Evaluates `ineq` before and after `perturbation` (no refinement pass).
pub fn strictness_probe(ineq: Inequality, cfg: &TheoremConfig, perturbation: Perturbation) -> Result<ProbeReport> {
    let base = evaluate_with(ineq, cfg, false)?;
    let mut moved = cfg.clone();
    moved.field = perturbation.apply(&cfg.field);
    let perturbed = evaluate_with(ineq, &moved, false)?;
    let departure = perturbed.ratio - base.ratio;
    Ok(ProbeReport { base, perturbed, departure })
}
