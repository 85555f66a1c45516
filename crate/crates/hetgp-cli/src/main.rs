use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hetgp_cli::config::{Config, ConfigError};
use hetgp_cli::runner::{export_datasets, run_experiment, RunError};
use hetgp_cli::study::{export_study, run_sampler_study};
use hetgp_cli::summarize::summarize_dir;

/// Heteroscedastic GP regression experiments: grid runs, sampler studies,
/// pairwise summaries, and synthetic dataset export.
#[derive(Parser)]
#[command(name = "hetgp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a config file.
    Run { config: PathBuf },
    /// Run the GPLV sampler-efficiency study described by a config file.
    Study { config: PathBuf },
    /// Summarize a results directory into win counts and scatter data.
    Summarize { results_dir: PathBuf },
    /// Write the grid's synthetic datasets as CSV files.
    GenData { config: PathBuf },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

enum CliError {
    Config(ConfigError),
    Run(RunError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(RunError::Numerical { .. }) => EXIT_NUMERICAL,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Run(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = Config::load(&config)?;
            let out = run_experiment(&cfg)?;
            println!(
                "grid complete: {} rows ({} fresh, {} reused) -> {}",
                out.rows.len(),
                out.fresh_cells,
                out.reused_cells,
                out.results_csv.display()
            );
            let (_, summary) = summarize_dir(&cfg.experiment.out_dir)?;
            println!("summary -> {}", summary.display());
        }
        Command::Study { config } => {
            let cfg = Config::load(&config)?;
            let study = run_sampler_study(&cfg)?;
            let dir = cfg.experiment.out_dir.join("study");
            let files = export_study(&dir, &study)?;
            println!("study complete: {} files in {}", files.len(), dir.display());
        }
        Command::Summarize { results_dir } => {
            let (report, summary) = summarize_dir(&results_dir)?;
            let mut stdout = std::io::stdout().lock();
            hetgp_cli::summarize::write_summary(&mut stdout, &report).map_err(|source| {
                RunError::Io {
                    path: results_dir.clone(),
                    source,
                }
            })?;
            println!("\nsummary -> {}", summary.display());
        }
        Command::GenData { config } => {
            let cfg = Config::load(&config)?;
            let files = export_datasets(&cfg)?;
            println!(
                "wrote {} dataset files into {}",
                files.len(),
                cfg.experiment.out_dir.join("data").display()
            );
        }
    }
    Ok(())
}
