//! `vsgsim` — scenario runner, strategy comparator and small-signal
//! analyzer for the VSG active-power loop.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use vsg_cli::{analyze, cmd_compare, cmd_run, CliError};
use vsg_core::controllers::{StrategyKind, STRATEGY_NAMES};

#[derive(Parser)]
#[command(
    name = "vsgsim",
    about = "Virtual synchronous generator active-power loop simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    StrategyKind::from_str(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy on a scenario and write trace.csv + metrics.csv
    Run {
        /// Scenario config file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Strategy name; overrides the config's choice
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<StrategyKind>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Integration step override, seconds
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run several strategies on one scenario and write the comparison
    Compare {
        /// Scenario config file (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated strategy names
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy, required = true)]
        strategies: Vec<StrategyKind>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Integration step override, seconds
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Print the small-signal analysis of the configured operating point
    Analyze {
        /// Scenario config file (TOML)
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            strategy,
            out,
            dt,
        } => {
            let dir = cmd_run(&config, strategy, &out, dt)?;
            println!("wrote {}", dir.join("trace.csv").display());
            println!("wrote {}", dir.join("metrics.csv").display());
        }
        Command::Compare {
            config,
            strategies,
            out,
            dt,
        } => {
            let report = cmd_compare(&config, &strategies, &out, dt)?;
            print!("{}", report.to_text_table());
            println!();
            for row in &report.orderings {
                println!(
                    "{}: {} ({:.6}) {} {} ({:.6})",
                    row.quantity, row.a, row.a_value, row.relation, row.b, row.b_value
                );
            }
            println!("\nwrote {}", out.join("comparison.csv").display());
        }
        Command::Analyze { config } => {
            let report = analyze(&config)?;
            print!("{}", report.to_text());
            println!();
            print!("{}", report.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(&e, CliError::Core(vsg_core::Error::Config(msg)) if msg.contains("unknown strategy"))
            {
                eprintln!("valid strategies: {}", STRATEGY_NAMES.join(", "));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
