use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use eerds_cli::{run_subcommand, Options, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "eerds", version, about = "Simulate and certify the electro-energy-reaction-diffusion model")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; reference scenario A when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of random states in the battery.
    #[arg(long, global = true)]
    states: Option<usize>,

    #[arg(long, global = true)]
    margin: Option<f64>,

    /// Extra scenario configuration for `verify-eep`; repeatable. The word
    /// `reference` adds the three built-in scenarios.
    #[arg(long, global = true)]
    scenario: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::Subcommand)]
enum Command {
    /// Check the model hypotheses on a dense sample.
    CheckModel,
    /// Compute and verify the equilibrium.
    Equilibrium,
    /// Evaluate all certified constants.
    Constants,
    /// Run the simulator and write the trajectory.
    Simulate,
    /// Randomized battery of the functional inequalities.
    VerifyEep,
    /// Merge all JSON reports in the output directory.
    Report,
    /// Render plot.svg from a previous `simulate`.
    Plot,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::CheckModel => Subcommand::CheckModel,
            Command::Equilibrium => Subcommand::Equilibrium,
            Command::Constants => Subcommand::Constants,
            Command::Simulate => Subcommand::Simulate,
            Command::VerifyEep => Subcommand::VerifyEep,
            Command::Report => Subcommand::Report,
            Command::Plot => Subcommand::Plot,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        states: cli.states,
        margin: cli.margin,
        scenarios: cli.scenario,
    };
    match run_subcommand(cli.command.into(), &opts) {
        Ok(o) => {
            for a in &o.artifacts {
                println!("wrote {}", a.display());
            }
            println!("{}: {}", if o.pass { "ok" } else { "FAILED" }, o.message);
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
