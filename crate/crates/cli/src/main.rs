use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polywind_cli::config::{Experiment, Overrides, RunConfig, MAX_CONFIG_BYTES};
use polywind_cli::run::{execute, subcommand_accepts};
use polywind_cli::CliError;

#[derive(Parser, Debug)]
#[command(name = "polywind", version, about = "Rod-polymer winding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rotation-time Monte Carlo: mrt, mmrt, boundary-layer.
    Simulate(RunArgs),
    /// Quadrature constants of the asymptotic formulas.
    Analytic(RunArgs),
    /// Bracket and limit-moment checks of the angle CLT.
    CltCheck(RunArgs),
    /// Monte Carlo against closed forms: laplace-check, a-moment.
    Validate(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when neither this nor the config sets one.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Worker threads (0 = all cores). Does not change results.
    #[arg(long)]
    workers: Option<usize>,
    /// Leave the generation time out of the CSV header.
    #[arg(long)]
    no_timestamp: bool,
}

fn load(name: &str, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let meta = std::fs::metadata(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if meta.len() > MAX_CONFIG_BYTES as u64 {
                return Err(CliError::Config(format!("{} is too large", path.display())));
            }
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json_str(&text)?
        }
        None if name == "analytic" => RunConfig::bare(Experiment::AnalyticConstants),
        None => return Err(CliError::Config(format!("{name} needs --config"))),
    };
    if !subcommand_accepts(name, cfg.experiment) {
        return Err(CliError::Config(format!(
            "experiment {} cannot run under `{name}`",
            cfg.experiment.name()
        )));
    }
    cfg.apply(&Overrides {
        seed: args.seed,
        replicates: args.replicates,
        dt: args.dt,
        workers: args.workers,
        out: args.out.clone(),
    });
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Analytic(a) => ("analytic", a),
        Command::CltCheck(a) => ("clt-check", a),
        Command::Validate(a) => ("validate", a),
    };
    let result = load(name, args).and_then(|cfg| execute(&cfg, !args.no_timestamp));
    match result {
        Ok(Some(path)) => {
            log::info!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("polywind: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
