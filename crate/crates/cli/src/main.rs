use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ymcal::Log;

#[derive(Parser)]
#[command(
    name = "ymcal",
    version,
    about = "Lattice Yang-Mills heat-flow and estimate calibration"
)]
struct Cli {
    /// Print the JSON schema of the config file and exit.
    #[arg(long)]
    print_schema: bool,
    /// Progress notes on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of one config.
    Run { config: PathBuf },
    /// Run the config over `sweep.amplitudes` × `sweep.resolutions`.
    Sweep { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        println!(
            "{}",
            serde_json::to_string_pretty(&ymcal::config::schema()).expect("schema serializes")
        );
        return ExitCode::SUCCESS;
    }
    let log = Log {
        verbose: cli.verbose,
    };
    let code = match cli.command {
        Some(Command::Run { config }) => ymcal::run(&config, cli.out.as_deref(), log),
        Some(Command::Sweep { config }) => ymcal::sweep(&config, cli.out.as_deref(), log),
        None => {
            eprintln!("ymcal: expected a subcommand (run or sweep); see --help");
            ymcal::EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
