use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use etd_lab::harness::{detect_bounce, parse_curve_csv, run_experiment, ExperimentConfig};
use etd_lab::oracle::{build_table, save_table};
use etd_lab::policies::PolicyKind;
use etd_lab::stability::{key_matrix, load_chain, FiniteMRP};

#[derive(Parser)]
#[command(name = "etd-lab", version, about = "TD(0) vs emphatic TD(0) on fixed-policy Mountain Car")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a ground-truth value table by Monte-Carlo rollouts.
    Oracle {
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        sample: usize,
        #[arg(long)]
        rollouts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random-action probability of the state-sampling behavior policy
        /// (0 samples states under the target policy).
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a step-size sweep from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Key-matrix stability analysis of TD(λ) on a finite chain.
    Analyze {
        #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
        chain: Option<PathBuf>,
        #[arg(long, value_parser = ["counterexample"])]
        builtin: Option<String>,
    },
    /// Report the bounce statistics of each curve in a learning_curve.csv.
    Bounce {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        tail_fraction: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Oracle {
            steps,
            sample,
            rollouts,
            seed,
            epsilon,
            out,
        } => {
            let behavior = if epsilon == 0.0 {
                PolicyKind::Target
            } else {
                PolicyKind::behavior(epsilon)?
            };
            let started = Instant::now();
            let table = build_table(steps, sample, rollouts, seed, behavior)?;
            save_table(&table, &out).with_context(|| format!("writing {}", out.display()))?;
            let capped = table.entries.iter().filter(|e| e.capped).count();
            eprintln!(
                "wrote {} states to {} in {:.1?}{}",
                table.entries.len(),
                out.display(),
                started.elapsed(),
                if capped > 0 { format!(" ({capped} hit the rollout cap)") } else { String::new() }
            );
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let started = Instant::now();
            let out = run_experiment(&cfg)?;
            println!("alpha,mean_tail_msve,stderr,diverged_runs");
            for row in &out.study {
                println!(
                    "{},{},{},{}",
                    row.alpha,
                    row.mean_tail_msve.map(|v| v.to_string()).unwrap_or_default(),
                    row.stderr,
                    row.diverged_runs
                );
            }
            eprintln!("results in {} ({:.1?})", cfg.output_dir.display(), started.elapsed());
        }
        Command::Analyze { chain, builtin } => {
            let mrp = match (chain, builtin) {
                (Some(path), _) => load_chain(&path)?,
                (None, Some(_)) => FiniteMRP::counterexample(),
                (None, None) => bail!("pass --chain FILE or --builtin counterexample"),
            };
            println!("{}", key_matrix(&mrp)?);
        }
        Command::Bounce { curve, tail_fraction } => {
            let text = std::fs::read_to_string(&curve).with_context(|| format!("reading {}", curve.display()))?;
            println!("alpha,min_error,final_error,bounce");
            for (alpha, series) in parse_curve_csv(&text, &curve)? {
                let tail = ((series.len() as f64 * tail_fraction).round() as usize).max(1);
                let values: Option<Vec<f64>> = series.into_iter().collect();
                match values.as_deref().and_then(|v| detect_bounce(v, tail)) {
                    Some(b) => println!("{alpha},{},{},{}", b.min_error, b.final_error, b.bounce),
                    None => println!("{alpha},,,diverged"),
                }
            }
        }
    }
    Ok(())
}
