mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parisi_core::Error;

use crate::config::RunConfig;
use crate::output::Sink;

#[derive(Parser)]
#[command(
    name = "parisi",
    version,
    about = "Parisi functional evaluation, minimization and duality checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate P̂(α, γ), its γ-derivative and the stationarity residuals.
    Eval,
    /// Minimize over `steps`-step order parameters at each temperature.
    Minimize,
    /// Temperature scan with warm starts, as CSV.
    Scan,
    /// Γ̂(α) for the configured order parameter, plus a concavity
    /// certificate when three or more temperatures are given.
    Legendre,
    /// Both directions of the γ-duality and the L̂ non-uniqueness check.
    DualCheck,
    /// Random Energy Model closed forms and optional finite-N Monte Carlo.
    Rem,
    /// Monte Carlo of the controlled SDE against the cascade.
    SdeCheck,
    /// Run the acceptance suite.
    Selftest {
        /// Run only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn is_config_error(err: &anyhow::Error) -> bool {
    match err.downcast_ref::<Error>() {
        Some(Error::NotAParisiMeasure { .. }) => false,
        Some(_) => true,
        None => false,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    if let Command::Selftest { only } = &cli.command {
        return commands::selftest(only);
    }
    let mut raw = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => return Err(Error::Config("--config is required for this command".into()).into()),
    };
    if let Some(seed) = cli.seed {
        raw.override_seed(seed);
    }
    let cfg = raw.resolve()?;
    let sink = Sink::new(cli.out.as_deref())?;
    match cli.command {
        Command::Eval => commands::eval(&cfg, &sink),
        Command::Minimize => commands::minimize_cmd(&cfg, &sink),
        Command::Scan => commands::scan(&cfg, &sink),
        Command::Legendre => commands::legendre(&cfg, &sink),
        Command::DualCheck => commands::dual_check(&cfg, &sink),
        Command::Rem => commands::rem(&cfg, &sink),
        Command::SdeCheck => commands::sde_check(&cfg, &sink),
        Command::Selftest { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("parisi: one or more numerical checks failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(err) => {
            eprintln!("parisi: {err:#}");
            ExitCode::from(if is_config_error(&err) {
                EXIT_CONFIG
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}
