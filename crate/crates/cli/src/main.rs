use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlcomp_cli::{commands, load_scenario, CliError, CliResult, LoadedScenario};

#[derive(Parser)]
#[command(
    name = "nlcomp",
    version,
    about = "Time-periodic two-species competition with nonlocal dispersal: \
             simulation, spectra, periodic orbits, and criteria checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Output directory for artifacts (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the integration step size from the scenario.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Override the iteration cap (periods) from the scenario.
    #[arg(long, global = true)]
    max_periods: Option<usize>,

    /// Override the random seed from the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress status lines on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system and write the trajectory CSV.
    Simulate,
    /// Principal spectrum point of one species' growth linearization.
    Spectrum {
        /// Which species' growth coefficient to use (1 or 2).
        #[arg(long, default_value_t = 1)]
        species: u8,
    },
    /// Construct the coexistence periodic orbit by two-corner monotone
    /// iteration and write the orbit CSV plus residuals.
    Periodic,
    /// Evaluate the coexistence/extinction margin criteria.
    Criteria,
    /// Drive the second species to extinction and track the decay.
    Extinct,
    /// Solve the forced planar system of the scenario's [planar] block.
    Lemma31,
    /// Run the randomized property suite (exit 4 on any failure).
    Verify {
        /// Trials per check (default: run.trials from the scenario, or 100).
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn load(cli: &Cli) -> CliResult<LoadedScenario> {
    let path = cli.scenario.as_deref().ok_or_else(|| {
        CliError::Validation("this command needs --scenario <PATH>".to_string())
    })?;
    let mut loaded = load_scenario(path)?;
    // Flag overrides sit on top of the run block so reports stay
    // traceable to what actually ran.
    if let Some(dt) = cli.dt {
        loaded.scenario.run.dt = Some(dt);
    }
    if let Some(mp) = cli.max_periods {
        loaded.scenario.run.max_periods = mp;
    }
    if let Some(seed) = cli.seed {
        loaded.scenario.run.seed = seed;
    }
    loaded.scenario.check_ranges()?;
    Ok(loaded)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate => commands::simulate(&load(cli)?, out, cli.quiet),
        Command::Spectrum { species } => {
            commands::spectrum(&load(cli)?, *species, out, cli.quiet)
        }
        Command::Periodic => commands::periodic(&load(cli)?, out, cli.quiet),
        Command::Criteria => commands::criteria(&load(cli)?, out, cli.quiet),
        Command::Extinct => commands::extinct(&load(cli)?, out, cli.quiet),
        Command::Lemma31 => commands::lemma31(&load(cli)?, out, cli.quiet),
        Command::Verify { trials } => {
            let loaded = match &cli.scenario {
                Some(_) => Some(load(cli)?),
                None => None,
            };
            let seed = cli
                .seed
                .or(loaded.as_ref().map(|l| l.scenario.run.seed))
                .unwrap_or(42);
            let trials = trials
                .or(loaded.as_ref().map(|l| l.scenario.run.trials))
                .unwrap_or(100);
            commands::verify(loaded.as_ref(), seed, trials, out, cli.quiet)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
