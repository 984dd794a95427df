//! Command-line front end: run experiments, aggregate seed outputs, and
//! validate dataset files.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use banditmux::env::load_dataset;
use banditmux::harness::{
    aggregate_run_dir, aggregate_seeds, emit_aggregate_csv, run_seeds, AggregateSeries,
    ExperimentConfig, SeedOutcome,
};
use banditmux::Result;

#[derive(Parser)]
#[command(name = "banditmux", version, about = "Contextual-bandit experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config over its seeds, writing per-seed records,
    /// metrics, and summaries into the output directory.
    Run {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's seed list with the seeds 1 through N.
        #[arg(long, value_name = "N")]
        seeds: Option<u64>,
        /// Replace the config's output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Aggregate the metrics_seed_*.csv files in a run directory into one
    /// CSV of per-step means and standard errors.
    Aggregate {
        /// Run directory holding per-seed metrics files.
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Output CSV path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Check dataset files for schema and consistency problems.
    ValidateData {
        /// Actions file (JSON lines).
        #[arg(long, value_name = "FILE")]
        actions: PathBuf,
        /// Records file (JSON lines).
        #[arg(long, value_name = "FILE")]
        records: PathBuf,
    },
}

fn print_outcomes(outcomes: &[SeedOutcome], aggregate: &AggregateSeries) {
    for outcome in outcomes {
        let s = &outcome.series.summary;
        println!(
            "seed {}: avg_reward {:.5}, llm_calls {}, call_fraction {:.5}",
            outcome.seed, s.final_avg_reward, s.total_llm_calls, s.call_fraction
        );
    }
    let s = &aggregate.summary;
    println!(
        "mean over {} seeds: avg_reward {:.5} (sem {:.5}), llm_calls {:.1}, call_fraction {:.5}",
        s.num_seeds, s.final_avg_reward_mean, s.final_avg_reward_sem, s.llm_calls_mean,
        s.call_fraction_mean
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let mut config = ExperimentConfig::from_path(&config)?;
            if let Some(n) = seeds {
                config.seeds = (1..=n).collect();
            }
            if let Some(dir) = out {
                config.output_dir = dir;
            }
            config.validate()?;
            let outcomes = run_seeds(&config)?;
            let series: Vec<_> = outcomes.iter().map(|o| o.series.clone()).collect();
            let aggregate = aggregate_seeds(&series)?;
            print_outcomes(&outcomes, &aggregate);
            println!("outputs in {}", config.output_dir.display());
        }
        Command::Aggregate { input, out } => {
            let (seeds, aggregate) = aggregate_run_dir(&input)?;
            emit_aggregate_csv(&aggregate, &out)?;
            let s = &aggregate.summary;
            println!("aggregated seeds {seeds:?} into {}", out.display());
            println!(
                "per-seed llm_calls {:?}, mean {:.1}; avg_reward {:.5} (sem {:.5})",
                s.per_seed_llm_calls, s.llm_calls_mean, s.final_avg_reward_mean,
                s.final_avg_reward_sem
            );
        }
        Command::ValidateData { actions, records } => {
            let (action_space, record_list) = load_dataset(&actions, &records)?;
            println!(
                "ok: {} actions (dim {}), {} records",
                action_space.len(),
                action_space.dim(),
                record_list.len()
            );
        }
    }
    Ok(())
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
