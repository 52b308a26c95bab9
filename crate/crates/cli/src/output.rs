use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;
use crate::CliError;

/// One row of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub id: String,
    /// Sweep parameter; absent outside sweeps.
    pub parameter: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub constant_used: Option<f64>,
    pub sizes: Value,
    pub refinement_delta: Option<f64>,
    /// `equality`, `strict`, `violation-flag`, `pass`, `fail`, `value`, `rejected`
    /// (a sweep point outside the hypotheses) or `error`.
    pub verdict: String,
    pub error: Option<String>,
    pub details: Value,
}

impl Entry {
    pub fn new(id: impl Into<String>, verdict: impl Into<String>) -> Self {
        Entry {
            id: id.into(),
            parameter: None,
            lhs: None,
            rhs: None,
            ratio: None,
            constant_used: None,
            sizes: Value::Null,
            refinement_delta: None,
            verdict: verdict.into(),
            error: None,
            details: Value::Null,
        }
    }

    pub fn failed(id: impl Into<String>, error: impl ToString) -> Self {
        let mut e = Entry::new(id, "error");
        e.error = Some(error.to_string());
        e
    }

    /// Failing entries make the process exit with code 3.
    pub fn is_failure(&self) -> bool {
        matches!(self.verdict.as_str(), "violation-flag" | "fail" | "error")
    }

    fn line(&self) -> String {
        let mut s = format!("{:<22} {:<15}", self.id, self.verdict);
        if let Some(p) = self.parameter {
            let _ = write!(s, " at {p:<10.4}");
        }
        match (self.ratio, self.lhs) {
            (Some(r), _) => {
                let _ = write!(s, " ratio {r:.10}");
            }
            (None, Some(v)) => {
                let _ = write!(s, " {v:.12e}");
            }
            _ => {}
        }
        if let Some(d) = self.refinement_delta {
            let _ = write!(s, " (refinement delta {d:.2e})");
        }
        if let Some(r) = self.details.get("max_rel_err").and_then(Value::as_f64) {
            let _ = write!(s, " max rel err {r:.2e}");
        }
        if let Some(e) = &self.error {
            let _ = write!(s, " {e}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub entries: Vec<Entry>,
    /// Command-specific aggregate (sweep summary, kernel points, ...).
    pub summary: Value,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.entries.iter().any(Entry::is_failure)
    }

    pub fn print(&self) {
        for e in &self.entries {
            println!("{}", e.line());
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub started_unix_secs: u64,
    pub elapsed_ms: u128,
    pub exit_code: i32,
}

/// Writes the report in every requested format plus `metadata.json`.
/// `report.json` depends on nothing but the inputs; timing lives in the
/// metadata file.
pub fn write_all(dir: &Path, report: &Report, meta: &Metadata, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Json => ("report.json", to_json(report)?),
            Format::Csv => ("report.csv", to_csv(report)?),
            Format::Svg => ("ratio.svg", to_svg(report)),
        };
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    let path = dir.join("metadata.json");
    fs::write(&path, to_json(meta)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    parameter: Option<f64>,
    lhs: Option<f64>,
    rhs: Option<f64>,
    ratio: Option<f64>,
    refinement_delta: Option<f64>,
    id: &'a str,
    verdict: &'a str,
}

pub fn to_csv(report: &Report) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in &report.entries {
        w.serialize(CsvRow {
            parameter: e.parameter,
            lhs: e.lhs,
            rhs: e.rhs,
            ratio: e.ratio,
            refinement_delta: e.refinement_delta,
            id: &e.id,
            verdict: &e.verdict,
        })
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Line plot of ratio against parameter (entry index when there is no
/// parameter), with the line `ratio = 1` dashed.
pub fn to_svg(report: &Report) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = report
        .entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.ratio.map(|r| (e.parameter.unwrap_or(i as f64), r)))
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}: ratio</text>"#, W / 2.0, report.command);
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">no data</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let span = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi - lo < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) }
    };
    let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = span(&mut pts.iter().map(|p| p.1).chain(std::iter::once(1.0)));
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{M}" y1="{}" x2="{}" y2="{}"/>"#, H - M, W - M, H - M);
    let _ = writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}"/>"#, H - M);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<line x1="{M}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#888" stroke-dasharray="4 4"/>"##,
        W - M,
        y = py(1.0)
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{x:.4}</text>"#, px(x), H - M + 16.0);
    }
    for y in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{y:.6}</text>"#, M - 4.0, py(y) + 4.0);
    }
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{}"/>"##, path.join(" "));
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f5fa8"/>"##, px(x), py(y));
    }
    s.push_str("</svg>\n");
    s
}
