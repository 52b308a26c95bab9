use saitoh_core::geometry::Domain;
use saitoh_core::products::{sample_points, verify_decomposition, Identity, Measure, ProductSpaceSpec};
use saitoh_core::saitoh::{
    equality_case_config, evaluate_with, sweep, HarmonicFamily, Inequality, InequalityReport, SweepReport,
};
use saitoh_core::weights::{CFunction, WeightFactor, WeightField};
use saitoh_core::C64;
use serde_json::{json, Value};

use crate::config::{CommandKind, RunConfig};
use crate::output::{Entry, Report};
use crate::CliError;

const IDENTITY_TOL: f64 = 1e-6;
const DEFAULT_SAMPLES: usize = 5;

pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    let cmd = cfg.command.unwrap_or(CommandKind::Theorem);
    let (name, entries, summary) = match cmd {
        CommandKind::Kernel => ("kernel", kernel(cfg)?, Value::Null),
        CommandKind::Verify => ("verify", vec![verify(cfg, identity(cfg)?)?], Value::Null),
        CommandKind::Theorem => ("theorem", vec![theorem(cfg, inequality(cfg)?)?], Value::Null),
        CommandKind::Sweep => {
            let r = run_sweep(cfg)?;
            let summary = serde_json::to_value(&r.summary).map_err(|e| CliError::Io(e.to_string()))?;
            ("sweep", sweep_entries(&r), json!({ "axis": r.axis, "summary": summary }))
        }
        CommandKind::Suite => ("suite", suite(cfg)?, Value::Null),
    };
    Ok(Report { command: name.into(), entries, summary })
}

fn inequality(cfg: &RunConfig) -> Result<Inequality, CliError> {
    let id = cfg.id.as_deref().ok_or_else(|| CliError::Config("--id is required".into()))?;
    Ok(Inequality::parse(id)?)
}

fn identity(cfg: &RunConfig) -> Result<Identity, CliError> {
    let id = cfg.id.as_deref().ok_or_else(|| CliError::Config("--id is required".into()))?;
    Identity::parse(id).map_err(|e| CliError::Config(e.to_string()))
}

fn verdict_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn theorem_entry(r: &InequalityReport) -> Entry {
    let mut e = Entry::new(r.theorem.clone(), verdict_name(&r.verdict));
    e.lhs = Some(r.lhs);
    e.rhs = Some(r.rhs);
    e.ratio = Some(r.ratio);
    e.constant_used = Some(r.constant_used);
    e.sizes = serde_json::to_value(&r.sizes).unwrap_or(Value::Null);
    e.refinement_delta = r.refinement_delta;
    e.details = json!({
        "lhs_constant": r.lhs_constant,
        "lhs_kernel": r.lhs_kernel,
        "rhs_kernel": r.rhs_kernel,
        "refined_ratio": r.refined_ratio,
        "dropped_directions": r.dropped_directions,
    });
    e
}

fn theorem(cfg: &RunConfig, ineq: Inequality) -> Result<Entry, CliError> {
    let tc = cfg.theorem_config(ineq)?;
    let r = evaluate_with(ineq, &tc, cfg.refine.unwrap_or(true))?;
    Ok(theorem_entry(&r))
}

fn verify(cfg: &RunConfig, identity: Identity) -> Result<Entry, CliError> {
    let field = cfg.identity_field(identity)?;
    let jets = identity.is_jet().then(|| cfg.identity_jets(&field));
    let r = verify_decomposition(
        identity,
        &field,
        cfg.identity_resolution(),
        jets.as_ref(),
        cfg.samples.unwrap_or(DEFAULT_SAMPLES),
        cfg.seed(),
        cfg.tol.unwrap_or(IDENTITY_TOL),
    )?;
    let mut e = Entry::new(r.identity.clone(), if r.pass { "pass" } else { "fail" });
    e.sizes = json!({ "basis_dim": r.basis_dim });
    e.details = json!({
        "measure": r.measure,
        "tolerance": r.tolerance,
        "max_rel_err": r.max_rel_err,
        "samples": r.samples,
    });
    Ok(e)
}

fn run_sweep(cfg: &RunConfig) -> Result<SweepReport, CliError> {
    let ineq = inequality(cfg)?;
    let spec = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs --axis and --grid".into()))?;
    if spec.grid.is_empty() {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    let tc = cfg.theorem_config(ineq)?;
    Ok(sweep(ineq, &tc, spec.axis, &spec.grid, cfg.refine.unwrap_or(true)))
}

fn sweep_entries(r: &SweepReport) -> Vec<Entry> {
    r.points
        .iter()
        .map(|p| {
            let mut e = match (&p.report, &p.error) {
                (Some(rep), _) => theorem_entry(rep),
                (None, err) => {
                    let mut e = Entry::failed(r.theorem.clone(), err.clone().unwrap_or_default());
                    if p.rejected {
                        e.verdict = "rejected".into();
                    }
                    e
                }
            };
            e.parameter = Some(p.parameter);
            e
        })
        .collect()
}

fn kernel(cfg: &RunConfig) -> Result<Vec<Entry>, CliError> {
    let field = match &cfg.field {
        Some(f) => f.clone(),
        None => {
            let (domain, z0) = cfg.domain()?;
            let n = cfg.n.unwrap_or(1);
            let mut f = match n {
                0 => return Err(CliError::Config("n must be at least 1".into())),
                1 => WeightField::planar(domain, z0, 1.0),
                n => WeightField::product(vec![WeightFactor::new(domain, z0, n as f64); n]),
            };
            f.c = cfg.c.unwrap_or_default();
            f
        }
    };
    let measure = cfg.measure.unwrap_or(if field.n() == 1 { Measure::PlanarBoundary } else { Measure::MixedBoundary });
    let mut res = cfg.resolution.unwrap_or_else(|| saitoh_core::saitoh::TheoremConfig::default_resolution(&field));
    if let Some(b) = cfg.basis {
        res.basis = b;
    }
    if let Some(q) = cfg.quad {
        crate::config::apply_quad(&mut res, q);
    }
    let spec = ProductSpaceSpec::new(field.clone(), measure, false, res);
    spec.validate()?;
    let separable = !(measure == Measure::ProductArea && !field.c.is_constant());
    let eval: Box<dyn Fn(&[C64]) -> C64> = if separable {
        let onb = spec.tensor_onb()?;
        Box::new(move |z| onb.kernel(z, z))
    } else {
        let onb = spec.onb(saitoh_core::products::Assembly::Separable)?;
        Box::new(move |z| saitoh_core::kernels::kernel_eval(&onb, z, z))
    };
    let domains: Vec<Domain> = field.factors.iter().map(|f| f.domain).collect();
    let mut points = vec![field.base_point()];
    points.extend(sample_points(&domains, cfg.samples.unwrap_or(DEFAULT_SAMPLES), cfg.seed()));
    let sizes = json!({ "basis_degree": res.basis, "boundary_nodes": res.boundary_nodes, "radial_nodes": res.radial_nodes, "angular_nodes": res.angular_nodes });
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(i, z)| {
            let k = eval(&z);
            let mut e = Entry::new(format!("kernel:{}", measure.name()), "value");
            e.lhs = Some(k.re);
            e.sizes = sizes.clone();
            e.details = json!({ "point": z, "role": if i == 0 { "base" } else { "sample" }, "imag": k.im });
            e
        })
        .collect())
}

/// A fixed run covering every inequality and identity. Each item takes
/// the suite-wide sizes and seed.
pub fn suite_items() -> Result<Vec<RunConfig>, CliError> {
    let item = |command, id: &str| RunConfig { command: Some(command), id: Some(id.into()), ..RunConfig::default() };
    let mut items = vec![
        item(CommandKind::Theorem, "thm1.2"),
        RunConfig { domain: Some("annulus".into()), ..item(CommandKind::Theorem, "thm1.2") },
        item(CommandKind::Theorem, "thm1.3"),
        RunConfig { c: Some(CFunction::ExpDecay { eps: 0.5 }), ..item(CommandKind::Theorem, "thm1.3") },
    ];
    let annulus = Domain::annulus(C64::new(0.0, 0.0), 0.5, 1.0)?;
    let case = equality_case_config(
        Inequality::WeightedPlanar,
        &[annulus],
        &[C64::new(0.5f64.sqrt(), 0.0)],
        &[1.0],
        None,
        HarmonicFamily::LogPotential,
    )?;
    items.push(RunConfig { field: Some(case.field), ..item(CommandKind::Theorem, "thm1.3") });
    for id in ["thm1.6", "thm1.8", "thm1.9", "thm1.10", "thm1.11", "thm1.13", "thm1.15", "thm1.16", "thm1.19"] {
        items.push(item(CommandKind::Theorem, id));
    }
    for id in Identity::ALL {
        items.push(item(CommandKind::Verify, id.id()));
    }
    Ok(items)
}

fn suite(cfg: &RunConfig) -> Result<Vec<Entry>, CliError> {
    let shared = RunConfig { command: None, id: None, field: None, ..cfg.clone() };
    let mut entries = Vec::new();
    for it in suite_items()? {
        let run = it.clone().or(shared.clone());
        let id = run.id.clone().unwrap_or_default();
        let res = match it.command {
            Some(CommandKind::Verify) => identity(&run).and_then(|i| verify(&run, i)),
            _ => inequality(&run).and_then(|i| theorem(&run, i)),
        };
        entries.push(res.unwrap_or_else(|e| Entry::failed(id, e)));
    }
    Ok(entries)
}
