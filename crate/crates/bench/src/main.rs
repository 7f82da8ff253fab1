use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use surrogate_fidelity::experiment::{
    explain_row, replay_tables, run_suite, write_outputs, FidelityReference, Suite, SuiteSummary,
};
use surrogate_fidelity::metrics::TieRule;

/// Fidelity benchmark for interpretable surrogates of an SVR black box.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configuration of a suite manifest and write the tables.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the manifest's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// blackbox | truth
        #[arg(long = "fidelity-ref")]
        fidelity_ref: Option<FidelityReference>,
        /// include | strict
        #[arg(long)]
        ties: Option<TieRule>,
    },
    /// Recompute the statistics from Table 2 / Table 3 CSV files.
    Replay {
        #[arg(long)]
        table2: PathBuf,
        #[arg(long)]
        table3: PathBuf,
    },
    /// Explain one test row with the tree, linear surrogate and LIME.
    Explain {
        #[arg(long)]
        dataset: String,
        /// Index into the run's test set.
        #[arg(long)]
        row: usize,
        #[arg(long, default_value = "data/suite.manifest")]
        manifest: PathBuf,
        /// Feature count; defaults to the dataset's first run in the manifest.
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Some runs failed but the outputs were written.
const PARTIAL: u8 = 3;

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run {
            manifest,
            out,
            seed,
            fidelity_ref,
            ties,
        } => run(manifest, out, seed, fidelity_ref, ties),
        Command::Replay { table2, table3 } => {
            let summary = replay_tables(&table2, &table3)?;
            print!("{}", summary.report());
            Ok(0)
        }
        Command::Explain {
            dataset,
            row,
            manifest,
            features,
            seed,
        } => {
            let suite = Suite::load(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let mut config = match suite.first_run(&dataset) {
                Some(c) => c,
                None => {
                    let source = suite
                        .datasets
                        .get(&dataset)
                        .ok_or_else(|| anyhow!("unknown dataset `{dataset}`"))?
                        .clone();
                    let configs = suite.configs();
                    let mut c = configs
                        .into_iter()
                        .next()
                        .ok_or_else(|| anyhow!("manifest has no runs; pass --features"))?;
                    c.source = source;
                    c
                }
            };
            if let Some(k) = features {
                config.n_features = k;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            let data = config.source.load().with_context(|| {
                format!("stage `load` failed for {}", config.source.path.display())
            })?;
            println!("{}", explain_row(&config, &data, row)?);
            Ok(0)
        }
    }
}

fn run(
    manifest: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    fidelity_ref: Option<FidelityReference>,
    ties: Option<TieRule>,
) -> Result<u8> {
    let mut suite =
        Suite::load(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
    if let Some(s) = seed {
        suite.seed = s;
    }
    if let Some(r) = fidelity_ref {
        suite.settings.fidelity_reference = r;
    }
    if let Some(t) = ties {
        suite.settings.ties = t;
    }
    let started = Instant::now();
    let summary: SuiteSummary = run_suite(&suite.configs())?;
    write_outputs(&summary, &out)?;
    print!("{}", summary.report());
    eprintln!(
        "{} runs in {:.1}s, outputs in {}",
        summary.outcomes.len(),
        started.elapsed().as_secs_f64(),
        out.display()
    );
    let failed: Vec<String> = summary
        .outcomes
        .iter()
        .filter_map(|o| o.as_ref().err())
        .map(|f| {
            format!(
                "{} (stage `{}`)",
                f.config.id(),
                f.stage.unwrap_or("unknown")
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("failed runs: {}", failed.join(", "));
        Ok(PARTIAL)
    }
}
