use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use stosched_cli::commands;
use stosched_cli::report::REPORT;
use stosched_cli::{report, run_experiment, ExperimentConfig, Method, Overrides, PenaltySetting};

#[derive(Parser)]
#[command(
    name = "stosched",
    version,
    about = "Stochastic project scheduling experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// small, large, or a nonnegative number.
    #[arg(long, global = true)]
    penalty: Option<PenaltySetting>,
    /// Comma-separated subset of deterministic,saa,dfl.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seconds per solve.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Instance files, globs or `toy`; replaces the configured list.
    #[arg(long = "instance", global = true)]
    instances: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw train/validation/test scenarios.
    Gen,
    /// First stage from the rounded training means.
    SolveDet,
    /// First stage from the sample-average program.
    SolveSaa,
    /// Train the stochastic estimator and solve on its point prediction.
    TrainDfl,
    /// Evaluate stored first stages on the test split.
    Eval,
    /// Quartile tables from a results directory.
    Report {
        /// Results directory (defaults to --out).
        dir: Option<PathBuf>,
    },
    /// The whole pipeline.
    Run,
}

fn config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    Overrides {
        seed: common.seed,
        penalty: common.penalty,
        methods: common.methods.clone(),
        out: common.out.clone(),
        workers: common.workers,
        time_limit: common.time_limit,
        instances: (!common.instances.is_empty()).then(|| common.instances.clone()),
    }
    .apply(&mut config);
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let config = config(&cli.common)?;
    let written = match cli.command {
        Command::Gen => commands::gen(&config)?,
        Command::SolveDet => commands::solve_det(&config)?,
        Command::SolveSaa => commands::solve_saa_cmd(&config)?,
        Command::TrainDfl => commands::train_dfl(&config)?,
        Command::Eval => commands::eval(&config)?,
        Command::Run => run_experiment(&config)?.files,
        Command::Report { dir } => {
            let dir = dir.unwrap_or_else(|| config.out.clone());
            let r = report(&dir)?;
            r.write_csv(&dir.join(REPORT))?;
            print!("{}", r.to_text());
            vec![dir.join(REPORT)]
        }
    };
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}
