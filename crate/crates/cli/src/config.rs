use std::path::PathBuf;

use clap::ValueEnum;
use saitoh_core::geometry::Domain;
use saitoh_core::products::{Identity, JetData, Measure, Resolution};
use saitoh_core::saitoh::{Inequality, SweepAxis, TheoremConfig, Tolerances};
use saitoh_core::weights::{CFunction, FiberFactor, WeightFactor, WeightField};
use saitoh_core::C64;
use serde::{Deserialize, Deserializer};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Kernel,
    Verify,
    Theorem,
    Sweep,
    Suite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(deserialize_with = "axis_spelling")]
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

/// The JSON config document. Every key is optional; command-line flags
/// override the file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    /// Theorem id for `theorem`/`sweep`, identity id for `verify`.
    pub id: Option<String>,
    /// Domain preset: `disc`, `annulus` or `annulus:<inner radius>`.
    pub domain: Option<String>,
    #[serde(default, deserialize_with = "c_spelling")]
    pub c: Option<CFunction>,
    /// Number of factor domains for product presets.
    pub n: Option<usize>,
    /// Full weight field; replaces the preset built from `domain`, `c` and `n`.
    pub field: Option<WeightField>,
    pub jets: Option<JetData>,
    pub resolution: Option<Resolution>,
    /// Overrides the basis degree of `resolution`.
    pub basis: Option<u32>,
    /// Nodes per circle; see [`apply_quad`].
    pub quad: Option<usize>,
    pub tolerances: Option<Tolerances>,
    /// Equality tolerance for theorems, relative-error tolerance for identities.
    pub tol: Option<f64>,
    pub sweep: Option<SweepSpec>,
    #[serde(default, deserialize_with = "measure_spelling")]
    pub measure: Option<Measure>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub refine: Option<bool>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Fills unset keys of `self` from `other`.
    pub fn or(self, other: RunConfig) -> RunConfig {
        RunConfig {
            command: self.command.or(other.command),
            id: self.id.or(other.id),
            domain: self.domain.or(other.domain),
            c: self.c.or(other.c),
            n: self.n.or(other.n),
            field: self.field.or(other.field),
            jets: self.jets.or(other.jets),
            resolution: self.resolution.or(other.resolution),
            basis: self.basis.or(other.basis),
            quad: self.quad.or(other.quad),
            tolerances: self.tolerances.or(other.tolerances),
            tol: self.tol.or(other.tol),
            sweep: self.sweep.or(other.sweep),
            measure: self.measure.or(other.measure),
            samples: self.samples.or(other.samples),
            seed: self.seed.or(other.seed),
            refine: self.refine.or(other.refine),
            out: self.out.or(other.out),
            formats: self.formats.or(other.formats),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn formats(&self) -> Vec<Format> {
        let mut f = self.formats.clone().unwrap_or_default();
        f.push(Format::Json);
        f.sort();
        f.dedup();
        f
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("saitoh-out"))
    }

    pub fn domain(&self) -> Result<(Domain, C64), CliError> {
        parse_domain(self.domain.as_deref().unwrap_or("disc"))
    }

    fn factor_count(&self, default: usize) -> Result<usize, CliError> {
        match self.n.unwrap_or(default) {
            0 => Err(CliError::Config("n must be at least 1".into())),
            n if n > 4 => Err(CliError::Config(format!("n = {n} is too large for dense product bases"))),
            n => Ok(n),
        }
    }

    /// The weight field and jets for a theorem, from `field` or the presets.
    pub fn theorem_config(&self, ineq: Inequality) -> Result<TheoremConfig, CliError> {
        let field = match &self.field {
            Some(f) => f.clone(),
            None => {
                let (domain, z0) = self.domain()?;
                let c = self.c.unwrap_or_default();
                let mut f = if ineq.is_planar() {
                    if self.factor_count(1)? != 1 {
                        return Err(CliError::Config(format!("{ineq} takes one domain")));
                    }
                    WeightField::planar(domain, z0, 1.0)
                } else {
                    let n = self.factor_count(2)?;
                    WeightField::product(vec![WeightFactor::new(domain, z0, n as f64); n])
                };
                f.c = c;
                if ineq.is_fibered() {
                    f.fiber = vec![FiberFactor::new(Domain::unit_disc(), C64::new(0.0, 0.0))];
                }
                f
            }
        };
        let jets = match (&self.jets, ineq.is_jet()) {
            (Some(j), _) => Some(j.clone()),
            (None, true) => Some(default_jets(field.n(), ineq.is_fibered().then_some(field.fiber.len()))),
            (None, false) => None,
        };
        let mut res = self.resolution.unwrap_or_else(|| TheoremConfig::default_resolution(&field));
        self.apply_sizes(&mut res);
        let mut tolerances = self.tolerances.unwrap_or_default();
        if let Some(t) = self.tol {
            tolerances.equality = t;
        }
        Ok(TheoremConfig { field, jets, resolution: res, tolerances })
    }

    /// Weight field for an identity check: `n` copies of the preset domain
    /// with a unit-disc fibre.
    pub fn identity_field(&self, identity: Identity) -> Result<WeightField, CliError> {
        if let Some(f) = &self.field {
            return Ok(f.clone());
        }
        let (domain, z0) = self.domain()?;
        let mut f = if identity == Identity::BoundaryFiber {
            if self.factor_count(1)? != 1 {
                return Err(CliError::Config(format!("{} takes one base domain", identity.id())));
            }
            WeightField::planar(domain, z0, 1.0)
        } else {
            let n = self.factor_count(2)?;
            WeightField::product(vec![WeightFactor::new(domain, z0, n as f64); n])
        };
        f.c = self.c.unwrap_or_default();
        f.fiber = vec![FiberFactor::new(Domain::unit_disc(), C64::new(0.0, 0.0))];
        Ok(f)
    }

    /// Small degrees and quadrature sizes that keep the brute-force side cheap.
    pub fn identity_resolution(&self) -> Resolution {
        let mut res = self
            .resolution
            .unwrap_or_else(|| Resolution::new(2, 2).with_area_nodes(8, 12).with_boundary_nodes(96));
        self.apply_sizes(&mut res);
        res
    }

    pub fn identity_jets(&self, field: &WeightField) -> JetData {
        self.jets.clone().unwrap_or_else(|| JetData {
            beta_tilde: vec![1; field.n()],
            l: vec![vec![C64::new(1.0, 0.0)]; field.n()],
            b: vec![vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]; field.fiber.len()],
        })
    }

    fn apply_sizes(&self, res: &mut Resolution) {
        if let Some(b) = self.basis {
            res.basis = b;
        }
        if let Some(q) = self.quad {
            apply_quad(res, q);
        }
    }
}

/// `--quad n`: `n` nodes on every boundary circle and every angular ring,
/// `max(n/2, 8)` radial Gauss nodes.
pub fn apply_quad(res: &mut Resolution, n: usize) {
    res.boundary_nodes = Some(n);
    res.angular_nodes = Some(n);
    res.radial_nodes = Some((n / 2).max(8));
}

fn default_jets(n: usize, fiber: Option<usize>) -> JetData {
    JetData {
        beta_tilde: vec![0; n],
        l: vec![vec![C64::new(1.0, 0.0)]; n],
        b: vec![vec![C64::new(1.0, 0.0)]; fiber.unwrap_or(0)],
    }
}

/// `disc`, `annulus` (inner radius 0.5) or `annulus:<r>`; the base point is the
/// centre of a disc and the point `sqrt(r)` on the positive axis of an annulus.
pub fn parse_domain(s: &str) -> Result<(Domain, C64), CliError> {
    let bad = |e: String| CliError::Config(format!("domain {s:?}: {e}"));
    let s = s.trim().to_ascii_lowercase();
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k.to_string(), Some(a.to_string())),
        None => (s.clone(), None),
    };
    match (kind.as_str(), arg) {
        ("disc" | "unit-disc", None) => Ok((Domain::unit_disc(), C64::new(0.0, 0.0))),
        ("annulus", r) => {
            let r = match r {
                None => 0.5,
                Some(a) => a.parse::<f64>().map_err(|e| bad(e.to_string()))?,
            };
            let d = Domain::annulus(C64::new(0.0, 0.0), r, 1.0).map_err(|e| bad(e.to_string()))?;
            Ok((d, C64::new(r.sqrt(), 0.0)))
        }
        _ => Err(bad("expected disc, annulus or annulus:<r>".into())),
    }
}

/// `one`, `exp:<eps>`.
pub fn parse_c(s: &str) -> Result<CFunction, CliError> {
    let s = s.trim().to_ascii_lowercase();
    if s == "one" || s == "1" {
        return Ok(CFunction::One);
    }
    let eps = s
        .strip_prefix("exp:")
        .or_else(|| s.strip_prefix("exp-decay:"))
        .ok_or_else(|| CliError::Config(format!("c {s:?}: expected one or exp:<eps>")))?;
    let eps = eps.parse::<f64>().map_err(|e| CliError::Config(format!("c {s:?}: {e}")))?;
    let c = CFunction::ExpDecay { eps };
    c.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(c)
}

/// `inner-radius`, `exponent[:k]`, `harmonic`, `eps`.
pub fn parse_axis(s: &str) -> Result<SweepAxis, CliError> {
    let s = s.trim().to_ascii_lowercase();
    match s.split_once(':') {
        None if s == "inner-radius" => Ok(SweepAxis::InnerRadius),
        None if s == "exponent" || s == "p" => Ok(SweepAxis::Exponent { factor: 0 }),
        None if s == "harmonic" || s == "harmonic-coefficient" => Ok(SweepAxis::HarmonicCoefficient),
        None if s == "eps" => Ok(SweepAxis::Eps),
        Some(("exponent" | "p", k)) => {
            let factor = k.parse().map_err(|e| CliError::Config(format!("axis {s:?}: {e}")))?;
            Ok(SweepAxis::Exponent { factor })
        }
        _ => Err(CliError::Config(format!("axis {s:?}: expected inner-radius, exponent[:k], harmonic or eps"))),
    }
}

pub fn parse_measure(s: &str) -> Result<Measure, CliError> {
    let m = match s.trim().to_ascii_lowercase().as_str() {
        "boundary" | "planar-boundary" => Measure::PlanarBoundary,
        "area" | "planar-area" => Measure::PlanarArea,
        "mixed-boundary" => Measure::MixedBoundary,
        "distinguished" | "distinguished-boundary" => Measure::Distinguished,
        "product-area" => Measure::ProductArea,
        other => return Err(CliError::Config(format!("unknown measure {other:?}"))),
    };
    Ok(m)
}

/// A config value written either as its command-line spelling or in full.
#[derive(Deserialize)]
#[serde(untagged)]
enum Spelled<T> {
    Text(String),
    Full(T),
}

fn spelled<'de, D, T>(d: D, parse: fn(&str) -> Result<T, CliError>) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    match Spelled::<T>::deserialize(d)? {
        Spelled::Text(s) => parse(&s).map_err(serde::de::Error::custom),
        Spelled::Full(v) => Ok(v),
    }
}

fn axis_spelling<'de, D: Deserializer<'de>>(d: D) -> Result<SweepAxis, D::Error> {
    spelled(d, parse_axis)
}

fn c_spelling<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CFunction>, D::Error> {
    spelled(d, parse_c).map(Some)
}

fn measure_spelling<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Measure>, D::Error> {
    spelled(d, parse_measure).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"command": "theorem", "bogus": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"command": "sweep", "sweep": {"axis": {"kind": "eps"}, "grid": [0, 1]}}"#)
            .unwrap();
        assert_eq!(c.sweep.unwrap().axis, SweepAxis::Eps);
        let c = RunConfig::from_json(r#"{"c": "exp:0.5", "measure": "area", "sweep": {"axis": "exponent:1", "grid": [2]}}"#)
            .unwrap();
        assert_eq!(c.c, Some(CFunction::ExpDecay { eps: 0.5 }));
        assert_eq!(c.measure, Some(Measure::PlanarArea));
        assert_eq!(c.sweep.unwrap().axis, SweepAxis::Exponent { factor: 1 });
        assert!(RunConfig::from_json(r#"{"c": "exp:-1"}"#).is_err());
    }

    #[test]
    fn presets_parse() {
        assert_eq!(parse_domain("annulus:0.25").unwrap().1, C64::new(0.5, 0.0));
        assert!(parse_domain("annulus:2").is_err());
        assert_eq!(parse_c("exp:0.5").unwrap(), CFunction::ExpDecay { eps: 0.5 });
        assert!(parse_c("exp:-2").is_err());
        assert_eq!(parse_axis("exponent:1").unwrap(), SweepAxis::Exponent { factor: 1 });
    }
}
