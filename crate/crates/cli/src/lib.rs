//! Command-line driver: kernel values, decomposition checks, single
//! inequalities, parameter sweeps and the fixed suite.
//!
//! Exit codes: 0 success, 2 invalid input or failed hypothesis (nothing is
//! written), 3 numerical failure, violation flag or failed identity.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

use config::{parse_axis, parse_c, parse_measure, CommandKind, Format, RunConfig, SweepSpec};
use output::Metadata;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] saitoh_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(e) if e.is_rejection() => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "saitoh-lab", version, about = "Weighted Hardy/Bergman kernels and Saitoh-type inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Kernel values at the base point and at seeded sample points.
    Kernel,
    /// Brute-force against factored kernels for one identity.
    Verify,
    /// One inequality with a refinement pass.
    Theorem,
    /// One inequality over a parameter grid.
    Sweep,
    /// Every inequality and identity on fixed configurations.
    Suite,
}

impl From<Command> for CommandKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Kernel => CommandKind::Kernel,
            Command::Verify => CommandKind::Verify,
            Command::Theorem => CommandKind::Theorem,
            Command::Sweep => CommandKind::Sweep,
            Command::Suite => CommandKind::Suite,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Opts {
    /// JSON run config; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Theorem id (thm1.2 .. thm1.19) or identity id (3:E4, 3:E8, pro-28, ...).
    #[arg(long, alias = "identity", global = true)]
    pub id: Option<String>,
    /// disc, annulus or annulus:<inner radius>.
    #[arg(long, global = true)]
    pub domain: Option<String>,
    /// one or exp:<eps>.
    #[arg(long, global = true)]
    pub c: Option<String>,
    /// Number of factor domains.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Equality tolerance (theorems) or relative-error tolerance (identities).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Basis degree (Laurent range on annuli).
    #[arg(long, global = true)]
    pub basis: Option<u32>,
    /// Quadrature nodes per circle.
    #[arg(long, global = true)]
    pub quad: Option<usize>,
    /// Extra output formats; JSON is always written.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
    /// Sweep axis: inner-radius, exponent[:k], harmonic or eps.
    #[arg(long, global = true)]
    pub axis: Option<String>,
    /// Comma-separated sweep grid.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Vec<f64>,
    /// Measure for `kernel`: boundary, area, mixed-boundary, distinguished, product-area.
    #[arg(long, global = true)]
    pub measure: Option<String>,
    /// Sample points for `kernel` and `verify`.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Skip the refinement pass.
    #[arg(long, global = true)]
    pub no_refine: bool,
}

impl Opts {
    /// The run config described by the flags alone.
    fn to_config(&self) -> Result<RunConfig, CliError> {
        let sweep = match (&self.axis, self.grid.is_empty()) {
            (Some(a), false) => Some(SweepSpec { axis: parse_axis(a)?, grid: self.grid.clone() }),
            (None, true) => None,
            _ => return Err(CliError::Config("--axis and --grid go together".into())),
        };
        Ok(RunConfig {
            id: self.id.clone(),
            domain: self.domain.clone(),
            c: self.c.as_deref().map(parse_c).transpose()?,
            n: self.n,
            basis: self.basis,
            quad: self.quad,
            tol: self.tol,
            sweep,
            measure: self.measure.as_deref().map(parse_measure).transpose()?,
            samples: self.samples,
            seed: self.seed,
            refine: self.no_refine.then_some(false),
            out: self.out.clone(),
            formats: (!self.format.is_empty()).then(|| self.format.clone()),
            ..RunConfig::default()
        })
    }
}

/// Flags merged over the config file.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let flags = cli.opts.to_config()?;
    let file = match &cli.opts.config {
        None => RunConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
    };
    let cmd: CommandKind = cli.command.into();
    if let Some(c) = file.command {
        if c != cmd {
            return Err(CliError::Config(format!("config is for {c:?}, command is {cmd:?}")));
        }
    }
    let mut cfg = flags.or(file);
    cfg.command = Some(cmd);
    Ok(cfg)
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let report = match commands::execute(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    report.print();
    let code = if report.failed() { 3 } else { 0 };
    let meta = Metadata {
        tool: "saitoh-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: report.command.clone(),
        args: args.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        started_unix_secs: started,
        elapsed_ms: clock.elapsed().as_millis(),
        exit_code: code,
    };
    match output::write_all(&cfg.out_dir(), &report, &meta, &cfg.formats()) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            code
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}
