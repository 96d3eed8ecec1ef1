use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radpair::cli::{self, CliError, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "radpair", version, about = "Radical-pair recombination master equations")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Scenario config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Overrides the seed of a random initial state.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Integrate every configured model and write trajectory CSVs.
    Run,
    /// Run the consistency checks and write a JSON report.
    Verify,
    /// Tabulate the singlet probability of every configured model.
    Compare,
}

fn load(args: &Args) -> Result<ScenarioConfig, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(cli::ConfigError::Parse("--config <path> is required".into())))?;
    let mut config = cli::load_config(path)?;
    if let Some(seed) = args.seed {
        if !cli::override_seed(&mut config, seed) && !args.quiet {
            eprintln!("note: --seed has no effect unless initial_state is random");
        }
    }
    Ok(config)
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let config = load(args)?;
    let outcome = match args.command {
        Command::Run => cli::cmd_run(&config, &args.out_dir)?,
        Command::Verify => {
            let (outcome, report) = cli::cmd_verify(&config, &args.out_dir)?;
            if !args.quiet {
                for check in &report.checks {
                    println!(
                        "{:<32} {} max_deviation={:.3e} t={:.4} tolerance={:.1e}",
                        check.name,
                        if check.passed { "PASS" } else { "FAIL" },
                        check.max_deviation,
                        check.t_at_max,
                        check.tolerance
                    );
                }
            }
            outcome
        }
        Command::Compare => {
            let (outcome, table) = cli::cmd_compare(&config, &args.out_dir)?;
            if !args.quiet {
                print!("{table}");
            }
            outcome
        }
    };
    if !args.quiet {
        for file in &outcome.files {
            eprintln!("wrote {}", file.display());
        }
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
