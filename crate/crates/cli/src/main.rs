//! `decop` — stage-oriented CLI for the membership-inference audit pipeline.
//!
//! One subcommand per pipeline stage plus `simulate` (synthetic corpus
//! generation) and `run` (several stages in order). Every subcommand takes
//! the same run configuration file; provider credentials are only ever read
//! from the environment variables named there.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use decop_core::pipeline::{self, Pipeline, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "decop",
    version,
    about = "Audit whether a language model was trained on specific documents",
    long_about = "Runs a paraphrase-quiz membership-inference audit: documents are chunked \
                  into ~120-word paragraphs, each paragraph gets three machine paraphrases, \
                  a target model answers all 24 option orderings of a verbatim-identification \
                  quiz, and recognition is quantified with guess rates, AUROC statistics, and \
                  bootstrap confidence intervals."
)]
struct Cli {
    /// Run configuration file (JSON).
    #[arg(long, short, global = true, default_value = "decop.json")]
    config: PathBuf,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus described by the config's `synthetic`
    /// section (writes manifest, chapters, and paragraph store).
    Simulate,
    /// Chunk and label the corpus named by the manifest.
    Ingest,
    /// Generate and validate three paraphrases per paragraph.
    Paraphrase,
    /// Enumerate all 24 quiz permutations per paragraph.
    Quiz,
    /// Submit quizzes to every configured target model.
    Query,
    /// Compute per-paragraph guess rates.
    Score,
    /// Compute the AUROC grid, confidence intervals, and pooled rates.
    Analyze,
    /// Emit the report tables from the analysis output.
    Report,
    /// Run several stages in order.
    Run {
        /// Run every stage.
        #[arg(long, conflicts_with = "stages")]
        all: bool,
        /// Comma-separated stage subset (e.g. "ingest,paraphrase,quiz").
        #[arg(long, value_delimiter = ',')]
        stages: Vec<String>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = RunConfig::load(&cli.config)
        .with_context(|| format!("loading run config {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        if let Some(synth) = &mut config.synthetic {
            synth.seed = seed;
        }
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn run_stages(config: RunConfig, stages: &[Stage]) -> Result<()> {
    let pipeline = Pipeline::new(config)?;
    let manifest = pipeline.run(stages)?;
    for stage in stages {
        if let Some(record) = manifest.stages.get(stage.name()) {
            let status = if record.skipped { "fresh" } else { "done" };
            eprintln!("{:<10} {status}", stage.name());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let config = load_config(&cli)?;

    match &cli.command {
        Command::Simulate => {
            pipeline::simulate(&config)?;
            eprintln!("synthetic corpus written under {}", config.out_dir.display());
        }
        Command::Ingest => run_stages(config, &[Stage::Ingest])?,
        Command::Paraphrase => run_stages(config, &[Stage::Paraphrase])?,
        Command::Quiz => run_stages(config, &[Stage::Quiz])?,
        Command::Query => run_stages(config, &[Stage::Query])?,
        Command::Score => run_stages(config, &[Stage::Score])?,
        Command::Analyze => run_stages(config, &[Stage::Analyze])?,
        Command::Report => run_stages(config, &[Stage::Report])?,
        Command::Run { all, stages } => {
            let selected: Vec<Stage> = if *all {
                Stage::ALL.to_vec()
            } else if stages.is_empty() {
                bail!("run requires --all or --stages");
            } else {
                stages
                    .iter()
                    .map(|name| {
                        Stage::parse(name)
                            .ok_or_else(|| anyhow::anyhow!("unknown stage {name:?}"))
                    })
                    .collect::<Result<_>>()?
            };
            run_stages(config, &selected)?;
        }
    }
    Ok(())
}
