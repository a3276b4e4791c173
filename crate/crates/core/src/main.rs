use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iga::attack::idx::DEFAULT_THRESHOLD;
use iga::attack::InitMode;
use iga::cli::{cmd_attack, cmd_bench, cmd_report, AttackCommand, ExperimentConfig};
use iga::parallel::Execution;
use iga::Error;

#[derive(Parser)]
#[command(
    name = "iga",
    version,
    about = "Improved genetic algorithm benchmarks and black-box attacks"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Random,
    Dataset,
}

#[derive(Subcommand)]
enum Command {
    /// Run the optimizer comparison grid.
    Bench {
        /// Config file, or `default` for the bundled grid.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evolve an image that a classifier assigns to `--label`.
    Attack {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
        label: u8,
        #[arg(long)]
        iters: usize,
        #[arg(long, value_enum)]
        init: Init,
        /// IDX image file used for dataset initialisation.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// IDX label file; restricts seed images to the target label.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        population: usize,
        #[arg(long, default_value = "attack-out")]
        out: PathBuf,
    },
    /// Regenerate summary.csv / summary.md from a bench directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Bench { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("bench-out"));
            let rows = cmd_bench(&cfg, &out, exec)?;
            for r in &rows {
                eprintln!(
                    "{:<10} {:<4} prob={:>5} mean={:.3e} p={}",
                    r.function,
                    r.algorithm,
                    r.prob_015,
                    r.mean,
                    r.p.map(|p| format!("{p:.2e}")).unwrap_or_else(|| "-".into())
                );
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Attack {
            model,
            label,
            iters,
            init,
            dataset,
            labels,
            threshold,
            seed,
            population,
            out,
        } => {
            let cmd = AttackCommand {
                model,
                label: label as usize,
                iterations: iters,
                init: match init {
                    Init::Random => InitMode::Random,
                    Init::Dataset => InitMode::Dataset,
                },
                dataset,
                dataset_labels: labels,
                threshold,
                seed,
                population_size: population,
                out,
                execution: exec,
            };
            let (_, meta) = cmd_attack(&cmd)?;
            eprintln!(
                "label {} confidence {:.4}% after {} generations ({} queries), wrote {}",
                meta.label,
                meta.confidence * 100.0,
                meta.iteration,
                meta.oracle_queries,
                cmd.out.display()
            );
        }
        Command::Report { input } => {
            let rows = cmd_report(&input)?;
            eprintln!("rebuilt {} summary rows in {}", rows.len(), input.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
