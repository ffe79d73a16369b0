use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cstar_polar::harness::{run_scenario, ConfigFile, ExperimentConfig, Overrides};
use cstar_polar::Result;

/// Seeded experiments on polars and bipolars of completely positive maps.
#[derive(Parser, Debug)]
#[command(name = "cstar-polar", version)]
struct Cli {
    /// verify-identities, polar-properties, bipolar-roundtrip, scalar-target,
    /// tracial, scalar-domain, jamiolkowski, scalar-case or tomography
    #[arg(long)]
    scenario: Option<String>,
    /// JSON config file, or `-` for standard input
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Report path; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial metrics as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn load_config(cli: Cli) -> Result<ExperimentConfig> {
    let file = match cli.config.as_deref() {
        None => ConfigFile::default(),
        Some("-") => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            ConfigFile::parse(&text)?
        }
        Some(path) => ConfigFile::parse(&std::fs::read_to_string(path)?)?,
    };
    ExperimentConfig::resolve(
        file,
        Overrides {
            scenario: cli.scenario,
            seed: cli.seed,
            trials: cli.trials,
            output_path: cli.out,
            csv_path: cli.csv,
        },
    )
}

fn run(config: &ExperimentConfig) -> Result<bool> {
    let report = run_scenario(config)?;
    let text = report.to_json();
    match &config.output_path {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    if let Some(path) = &config.csv_path {
        report.write_csv(path)?;
    }
    eprintln!(
        "{}: {} passed, {} failed ({} undecided) in {:.2}s",
        report.scenario, report.pass_count, report.fail_count, report.undecided_count, report.wall_time
    );
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
