//! `sim` — config-driven experiment runner for the edge GNN offloading
//! simulator.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sim_core::harness::{
    run_ablation, run_partition_bench, run_sweep, run_training, ExperimentConfig, OutPaths,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "sim",
    about = "Edge-network GNN offloading simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files and checkpoints.
    #[arg(long)]
    out: PathBuf,
    /// Override: use this single seed for evaluation and training.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured method over the (users, associations) sweep.
    Sweep(RunArgs),
    /// Time the layer-cut partitioner against the min-cut baseline.
    Bench(RunArgs),
    /// Train the configured learning method and write curve + checkpoint.
    Train(RunArgs),
    /// Paired evaluation of the full method against its no-partition arm.
    Ablate(RunArgs),
}

fn load_config(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
        config.train_seed = seed;
        config.bench_seed = seed;
    }
    Ok(config)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Sweep(args) => {
            let config = load_config(args)?;
            let path = run_sweep(&config, &OutPaths::new(&args.out))?;
            println!("wrote {}", path.display());
        }
        Command::Bench(args) => {
            let config = load_config(args)?;
            let path = run_partition_bench(&config, &OutPaths::new(&args.out))?;
            println!("wrote {}", path.display());
        }
        Command::Train(args) => {
            let config = load_config(args)?;
            let artifacts = run_training(&config, &OutPaths::new(&args.out))?;
            println!("wrote {}", artifacts.curve_csv.display());
            println!("checkpoint at {}", artifacts.checkpoint_dir.display());
        }
        Command::Ablate(args) => {
            let config = load_config(args)?;
            let path = run_ablation(&config, &OutPaths::new(&args.out))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
