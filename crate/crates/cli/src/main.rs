use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pseudotherm_cli::{run, CliError, Command, ExperimentConfig, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "pseudotherm", version, about = "Thermodynamics of pseudo-hermitian quantum systems")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides PSEUDOTHERM_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render SVG plots.
    #[arg(long)]
    svg: bool,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e.summary()).expect("summary serializes"));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let opts = RunOptions { out: args.out, svg: args.svg, workers: args.workers };
    match run(args.command, &cfg, &opts) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            if summary.failures.is_empty() {
                println!("{text}");
                ExitCode::SUCCESS
            } else {
                eprintln!("{text}");
                fail(&CliError::Checks { failures: summary.failures })
            }
        }
        Err(e) => fail(&e),
    }
}
