use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_with, Inequality, InequalityReport, TheoremConfig};
use crate::geometry::Domain;
use crate::weights::CFunction;
use crate::{Error, Result, C64};

/// The parameter varied by a sweep. Every axis acts on factor 0 unless it
/// names a factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SweepAxis {
    /// Inner radius as a fraction of the outer one; the base point moves to
    /// the middle `|z_0 - c| = (1 + r) R / 2`, keeping its argument, so that
    /// small `r` approaches the disc with a fixed base point.
    InnerRadius,
    /// The exponent `p` of one factor.
    Exponent { factor: usize },
    /// Coefficient `a` of `φ_0 = (planar Green part) + 2a log|z - c|`.
    HarmonicCoefficient,
    /// `ε` in `c(t) = e^{-εt}`.
    Eps,
}

impl SweepAxis {
    pub fn apply(&self, cfg: &TheoremConfig, value: f64) -> Result<TheoremConfig> {
        let mut cfg = cfg.clone();
        match *self {
            SweepAxis::InnerRadius => {
                let f = &mut cfg.field.factors[0];
                if !(value > 0.0 && value < 1.0) {
                    return Err(Error::InvalidDomain(format!("inner radius ratio {value} outside (0, 1)")));
                }
                let (c, r_out) = (f.domain.center(), f.domain.outer_radius());
                f.domain = Domain::annulus(c, value * r_out, r_out)?;
                let dir = f.base_point - c;
                let dir = if dir.norm() > 0.0 { dir / dir.norm() } else { C64::new(1.0, 0.0) };
                f.base_point = c + dir * (0.5 * (1.0 + value) * r_out);
                if !f.phi.green.is_empty() || !f.phi.log.is_empty() {
                    return Err(Error::Unsupported("inner radius sweeps take φ without poles".into()));
                }
            }
            SweepAxis::Exponent { factor } => {
                let f = cfg
                    .field
                    .factors
                    .get_mut(factor)
                    .ok_or_else(|| Error::Dimension(format!("no factor {factor}")))?;
                f.p = value;
            }
            SweepAxis::HarmonicCoefficient => {
                let f = &mut cfg.field.factors[0];
                if f.domain.inner_radius().is_none() {
                    return Err(Error::Unsupported("harmonic coefficient sweeps need an annulus".into()));
                }
                let c = f.domain.center();
                f.phi.log.retain(|t| (t.pole - c).norm() > 1e-14);
                f.phi = f.phi.clone().with_log(c, 2.0 * value);
            }
            SweepAxis::Eps => cfg.field.c = CFunction::ExpDecay { eps: value },
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub parameter: f64,
    pub report: Option<InequalityReport>,
    pub error: Option<String>,
    /// The error rejected the configuration (a failed hypothesis) rather than the numerics.
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub min_ratio: Option<f64>,
    pub argmin: Option<f64>,
    /// Every successful point has `ratio ≥ 1 − 1e-6`.
    pub all_at_least_one: bool,
    /// `Some(true)` increasing, `Some(false)` decreasing, `None` neither.
    pub monotone: Option<bool>,
    /// Largest jump of the ratio between neighbouring points.
    pub max_step: f64,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub theorem: String,
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub summary: SweepSummary,
}

/// Evaluates `ineq` at every grid value, in parallel. Errors at single
/// points are recorded, not propagated; results stay in grid order.
pub fn sweep(ineq: Inequality, cfg: &TheoremConfig, axis: SweepAxis, grid: &[f64], refine: bool) -> SweepReport {
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&v| match axis.apply(cfg, v).and_then(|c| evaluate_with(ineq, &c, refine)) {
            Ok(r) => SweepPoint { parameter: v, report: Some(r), error: None, rejected: false },
            Err(e) => SweepPoint { parameter: v, report: None, rejected: e.is_rejection(), error: Some(e.to_string()) },
        })
        .collect();
    let ok: Vec<(f64, f64)> =
        points.iter().filter_map(|p| p.report.as_ref().map(|r| (p.parameter, r.ratio))).collect();
    let best = ok.iter().cloned().min_by(|a, b| a.1.total_cmp(&b.1));
    let inc = ok.windows(2).all(|w| w[1].1 >= w[0].1);
    let dec = ok.windows(2).all(|w| w[1].1 <= w[0].1);
    let summary = SweepSummary {
        min_ratio: best.map(|b| b.1),
        argmin: best.map(|b| b.0),
        all_at_least_one: ok.iter().all(|(_, r)| *r >= 1.0 - 1e-6),
        monotone: match (inc, dec) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            _ => None,
        },
        max_step: ok.windows(2).map(|w| (w[1].1 - w[0].1).abs()).fold(0.0, f64::max),
        errors: points.iter().filter(|p| p.error.is_some()).count(),
    };
    SweepReport { theorem: ineq.id().to_string(), axis, points, summary }
}
