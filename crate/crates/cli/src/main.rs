use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paramtune_cli::{cmd_evaluate, cmd_generate, cmd_gridsearch, cmd_train, exit_code, EvaluateRequest, RunConfig};

/// Q-learning parameter tuning for a texture segmentation pipeline.
///
/// Exit status: 0 on success, 2 for configuration errors, 1 for runtime errors.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its manifest.
    Generate(Common),
    /// Learn parameters with Q-learning.
    Train(Common),
    /// Evaluate every action exhaustively and report the best.
    Gridsearch(Common),
    /// Run the pipeline once with fixed parameters.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Parameter assignment such as "n=13,k=3".
        #[arg(long)]
        action: String,
        #[arg(long)]
        image: PathBuf,
        /// Ground-truth mask; enables the difference metrics.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Also write per-channel feature CSVs.
        #[arg(long)]
        dump_features: bool,
    },
}

fn load(common: &Common) -> paramtune::Result<RunConfig> {
    Ok(RunConfig::load(&common.config)?.with_overrides(common.seed, common.out.clone()))
}

fn run(cli: Cli) -> paramtune::Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let m = cmd_generate(&load(&c)?)?;
            println!("generated {} samples with seed {}", m.count, m.seed);
        }
        Command::Train(c) => {
            let cfg = load(&c)?;
            let t = cmd_train(&cfg)?;
            let params: Vec<String> = t.best.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "best action {} ({}) mean D {:.4} after {} episodes",
                t.best.index,
                params.join(", "),
                t.best.mean_d,
                t.report.episodes.len()
            );
        }
        Command::Gridsearch(c) => {
            let r = cmd_gridsearch(&load(&c)?)?;
            let params: Vec<String> = r.best.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("oracle best action {} ({}) mean D {:.4}", r.best.index, params.join(", "), r.best.mean_d);
        }
        Command::Evaluate {
            common,
            action,
            image,
            mask,
            dump_features,
        } => {
            let req = EvaluateRequest {
                action,
                image,
                mask,
                dump_features,
            };
            let e = cmd_evaluate(&load(&common)?, &req)?;
            println!("{}", serde_json::to_string(&e.metrics)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
