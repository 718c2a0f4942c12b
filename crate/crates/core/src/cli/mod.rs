//! The `stgarch` command line.
//!
//! Every command resolves a [`RunManifest`] from built-in defaults, an
//! optional `--config` file and flags, prints it, and writes it as
//! `manifest.toml` next to its outputs. Passing that file back through
//! `--config` (or to `stgarch run`) reproduces the outputs byte for byte.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::execute;
pub use manifest::{
    CommandKind, CompareSettings, ForecastSettings, RunManifest, SimulateSettings, SurfaceSettings,
    MANIFEST_SCHEMA_VERSION,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "stgarch", version, about = "Bayesian smooth-transition ARMA-GARCH-M models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the posterior of one model and summarize it.
    Fit(RunArgs),
    /// Generate a series from the model.
    Simulate(RunArgs),
    /// Monte Carlo study of Gaussian against Student-t fits.
    Study(RunArgs),
    /// Bayes test between two fit summaries (model 1 against model 2).
    Compare {
        /// Summary files of model 1 and model 2.
        summaries: Vec<PathBuf>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Rolling one-step variance forecasts with both error families.
    Forecast(RunArgs),
    /// Log-likelihood over a (gamma, nu) grid.
    Surface(RunArgs),
    /// Re-run the command recorded in a manifest.
    Run {
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
struct RunArgs {
    /// Model keys applied over the configured model, e.g.
    /// "family=gaussian" or "p=1,q=1,r=1,s=1,transition=exponential,m=true".
    #[arg(long)]
    spec: Option<String>,
    /// TOML configuration; dotted keys such as `mcmc.iterations = 2000`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    input: Option<String>,
    /// Column name or zero-based index; defaults to the last column.
    #[arg(long)]
    column: Option<String>,
    /// `none` or `log-return`.
    #[arg(long)]
    transform: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Study replications per cell.
    #[arg(long)]
    reps: Option<usize>,
    /// Study sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Extra `key=value` override in TOML syntax; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

/// Maps an error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::NonPositivePrice { .. } | Error::Io(_) | Error::NotEnoughData { .. } => EXIT_DATA,
        _ => EXIT_NUMERIC,
    }
}

fn resolve(kind: CommandKind, args: &RunArgs, summaries: &[PathBuf]) -> crate::Result<RunManifest> {
    let text = match &args.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut m = RunManifest::resolve(kind, text.as_deref(), &args.sets)?;
    if let Some(s) = &args.spec {
        m.spec = m.spec.clone().with_overrides(s)?;
    }
    if let Some(v) = &args.input {
        m.input = Some(v.clone());
    }
    if let Some(v) = &args.column {
        m.column = Some(v.clone());
    }
    if let Some(v) = &args.transform {
        m.transform = v.parse()?;
    }
    if let Some(v) = &args.output {
        m.output = v.clone();
    }
    if let Some(v) = args.seed {
        m.seed = v;
    }
    if let Some(v) = args.chains {
        m.mcmc.chains = v;
    }
    if let Some(v) = args.iterations {
        m.mcmc.iterations = v;
    }
    if let Some(v) = args.burn_in {
        m.mcmc.burn_in = v;
    }
    if args.reps.is_some() || args.sizes.is_some() {
        let study = m
            .study
            .as_mut()
            .ok_or_else(|| Error::Config("--reps and --sizes apply to `study` only".into()))?;
        if let Some(v) = args.reps {
            study.n_reps = v;
        }
        if let Some(v) = &args.sizes {
            study.sample_sizes = v.clone();
        }
    }
    match summaries {
        [] => {}
        [a, b] => {
            let c = m.compare.get_or_insert_with(CompareSettings::default);
            c.model1 = a.display().to_string();
            c.model2 = b.display().to_string();
        }
        _ => return Err(Error::Config("compare takes exactly two summary files".into())),
    }
    m.sync_seed();
    m.validate()?;
    Ok(m)
}

fn dispatch(cli: Cli) -> crate::Result<()> {
    let (kind, args, summaries) = match cli.command {
        Command::Fit(a) => (CommandKind::Fit, a, Vec::new()),
        Command::Simulate(a) => (CommandKind::Simulate, a, Vec::new()),
        Command::Study(a) => (CommandKind::Study, a, Vec::new()),
        Command::Compare { summaries, args } => (CommandKind::Compare, args, summaries),
        Command::Forecast(a) => (CommandKind::Forecast, a, Vec::new()),
        Command::Surface(a) => (CommandKind::Surface, a, Vec::new()),
        Command::Run { manifest } => {
            let text = fs::read_to_string(&manifest).map_err(|e| Error::Config(format!("{}: {e}", manifest.display())))?;
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
            let kind: CommandKind = table
                .get("command")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::Config("manifest has no command".into()))?
                .parse()?;
            let args = RunArgs { config: Some(manifest), ..RunArgs::default() };
            (kind, args, Vec::new())
        }
    };
    let m = resolve(kind, &args, &summaries)?;
    print!("{}", m.to_toml()?);
    println!();
    execute(&m)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run_from(std::env::args_os())
}
