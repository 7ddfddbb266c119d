use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kreindyn_cli::{run, validate_model, CliError, OutputFormat, ScenarioConfig, ScenarioKind};

/// Indefinite-metric quantum dynamics: io maps, S-matrix sweeps, rate checks,
/// the two-channel vacuum model and cross-section tables.
#[derive(Debug, Parser)]
#[command(name = "kreindyn", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,

    /// Model or parameter file (JSON).
    #[arg(long)]
    input: Option<PathBuf>,

    /// Output directory.
    #[arg(long, env = "KREINDYN_OUT", default_value = "kreindyn-out")]
    out: PathBuf,

    /// Broadening of discrete levels; overrides the model file.
    #[arg(long)]
    eps: Option<f64>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Worker threads for grid sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file and print a JSON report.
    ValidateModel { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(Command::ValidateModel { path }) = cli.command {
        let report = validate_model(&path);
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    let (Some(kind), Some(input)) = (cli.scenario, cli.input) else {
        eprintln!("kreindyn: --scenario and --input are required (or use validate-model); see --help");
        return ExitCode::from(2);
    };
    let cfg = ScenarioConfig {
        kind,
        input,
        out: cli.out,
        eps: cli.eps,
        format: cli.format,
        threads: cli.threads,
    };
    match run(&cfg) {
        Ok(m) => {
            println!(
                "{}: {} checks passed, outputs in {} ({:.2} s)",
                m.scenario,
                m.checks.len(),
                cfg.out.display(),
                m.wall_time_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kreindyn: {e}");
            if let CliError::ChecksFailed(_) = e {
                eprintln!("kreindyn: partial results and manifest written to {}", cfg.out.display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
