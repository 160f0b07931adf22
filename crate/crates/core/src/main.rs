use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hydrosim::circuits::CircuitKind;
use hydrosim::harness::{self, HarnessError};

#[derive(Parser)]
#[command(name = "hydrosim", version, about = "Energy comparison of PDCV and PFCV cylinder circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one circuit and write its log and energy report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        circuit: CircuitKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both circuits and write the energy comparison.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search the relief setting for a target saving and write the result
    /// as a scenario file.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Target saving, percent.
        #[arg(long)]
        target: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a scenario without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate { config, circuit, out } => {
            let (manifest, report) = harness::cmd_simulate(&config, circuit, &out)?;
            print!("{}", report.to_table(circuit.as_str()));
            println!("config digest {}", manifest.config_digest);
        }
        Command::Compare { config, out } => {
            let (manifest, report) = harness::cmd_compare(&config, &out)?;
            print!("{}", report.to_table());
            println!("config digest {}", manifest.config_digest);
        }
        Command::Calibrate { config, target, out } => {
            let r = harness::cmd_calibrate(&config, target, &out)?;
            println!(
                "relief {} Pa, pump flow {:e} m^3/s, saving {:.2}% (target {}%)",
                r.cracking_pressure, r.supply_flow, r.saving_percent, r.target_percent
            );
            println!("wrote {}", out.display());
        }
        Command::Validate { config } => {
            let cfg = harness::cmd_validate(&config)?;
            println!("ok {}", cfg.digest());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
