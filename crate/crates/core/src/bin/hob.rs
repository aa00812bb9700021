use clap::{Parser, Subcommand};
use hob::config::{Mode, RunConfig};
use hob::execute::{execute, exit_code};
use hob::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Pseudo-spectral solver suite for a hydrostatic Oldroyd-B thin-layer model.
#[derive(Parser)]
#[command(name = "hob", version = hob::VERSION, about, max_term_width = 100)]
struct Cli {
    /// Run mode; alternative to giving the mode as a subcommand.
    #[arg(long, value_name = "MODE", global = true)]
    mode: Option<Mode>,

    /// Path to the TOML run configuration.
    #[arg(long, value_name = "FILE", global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides [output].dir from the config.
    #[arg(long, value_name = "DIR", global = true)]
    out: Option<PathBuf>,

    /// RNG seed; overrides the seed from the config.
    #[arg(long, value_name = "N", global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the hydrostatic limit system and its analytic monitors.
    Limit,
    /// Evolve the scaled relaxation system at a single epsilon.
    Eps,
    /// Run the limit and a family of epsilon runs, fit the error rate.
    Convergence,
    /// Check the product and composition estimates on seeded random fields.
    Lemmas,
    /// Time-step refinement study for both solvers.
    Selfconv,
}

impl Command {
    fn mode(&self) -> Mode {
        match self {
            Command::Limit => Mode::Limit,
            Command::Eps => Mode::Eps,
            Command::Convergence => Mode::Convergence,
            Command::Lemmas => Mode::Lemmas,
            Command::Selfconv => Mode::Selfconv,
        }
    }
}

fn resolve_mode(cli: &Cli) -> Result<Mode, Error> {
    match (&cli.command, cli.mode) {
        (Some(cmd), Some(flag)) if cmd.mode() != flag => Err(Error::InvalidArgument(format!(
            "subcommand '{}' conflicts with --mode {}",
            cmd.mode(),
            flag
        ))),
        (Some(cmd), _) => Ok(cmd.mode()),
        (None, Some(flag)) => Ok(flag),
        (None, None) => Err(Error::InvalidArgument(
            "no mode given: use a subcommand (limit, eps, convergence, lemmas, selfconv) or --mode"
                .into(),
        )),
    }
}

fn run(cli: &Cli) -> Result<(Mode, PathBuf), Error> {
    let mode = resolve_mode(cli)?;
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config <FILE> is required".into()))?;
    let mut config = RunConfig::from_file(config_path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    execute(&config, mode, &out_dir)?;
    Ok((mode, out_dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((mode, out_dir)) => {
            println!("{} ok: artifacts in {}", mode, out_dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
