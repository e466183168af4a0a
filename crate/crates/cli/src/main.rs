use std::path::PathBuf;
use std::process::ExitCode;

use afp_lab::experiments::{check, run_experiment};
use afp_lab::suite::{load_manifest, run_suite, SuiteOptions};
use afp_lab::{exit, ExperimentConfig, LabError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afp-lab", version, about = "Run Følner averaging and Reiter experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (default: the config's `out`, else ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of every experiment
    #[arg(long)]
    seed: Option<u64>,
    /// Run independent experiments in parallel
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every experiment listed in a manifest
    Suite {
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            err.downcast_ref::<LabError>().map_or(exit::FAILED, LabError::exit_code)
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run { config, common } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = common.seed {
                cfg.override_seed(seed);
            }
            check(&cfg)?;
            let out = common.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let summary = run_experiment(&cfg, &out)?;
            println!("{} {}: {}", if summary.passed { "PASS" } else { "FAIL" }, summary.name, summary.summary);
            Ok(if summary.passed { exit::OK } else { exit::FAILED })
        }
        Command::Suite { manifest, common } => {
            let configs = load_manifest(&manifest, common.seed)?;
            let options = SuiteOptions {
                out: common.out.unwrap_or_else(|| PathBuf::from("out")),
                parallel: common.parallel,
            };
            let report = run_suite(&configs, &options)?;
            let failed = report.failed();
            if failed.is_empty() {
                println!("suite passed: {} experiments", configs.len());
            } else {
                eprintln!("failed experiments: {}", failed.join(", "));
            }
            Ok(report.exit_code())
        }
    }
}
