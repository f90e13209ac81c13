use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

mod cmd;
mod input;
mod output;

use output::{Artifacts, RunInfo};

#[derive(Debug, Parser)]
#[command(name = "hiersage", version, about = "Hierarchy-aware neighbour aggregation for node classification")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled graph with a two-level class hierarchy.
    Synth(cmd::data::SynthArgs),
    /// Degree, assortativity, Louvain and betweenness features.
    Features(cmd::data::FeaturesArgs),
    /// Random-walk skip-gram node embeddings.
    Embed(cmd::data::EmbedArgs),
    /// Train/validation/test node split.
    Split(cmd::data::SplitArgs),
    /// Train one model and save a checkpoint.
    Train(cmd::model::TrainArgs),
    /// Score a checkpoint on the validation or test nodes.
    Eval(cmd::model::EvalArgs),
    /// Grid search over model configurations.
    Search(cmd::model::SearchArgs),
    /// Neighbourhood label matrix and label histograms.
    Analyze(cmd::data::AnalyzeArgs),
    /// Aggregator comparison on generated data.
    Bench(cmd::model::BenchArgs),
    /// Validate a hierarchy file and summarize it.
    Hierarchy(cmd::data::HierarchyArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, clap::Args)]
struct RerunArgs {
    /// Manifest written by an earlier run.
    manifest: PathBuf,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Features(_) => "features",
            Command::Embed(_) => "embed",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Search(_) => "search",
            Command::Analyze(_) => "analyze",
            Command::Bench(_) => "bench",
            Command::Hierarchy(_) => "hierarchy",
            Command::Rerun(_) => "rerun",
        }
    }
}

pub struct Ctx {
    pub seed: u64,
    pub format: Format,
}

fn execute(cli: &Cli) -> Result<Artifacts> {
    let ctx = Ctx {
        seed: cli.seed,
        format: cli.format,
    };
    match &cli.command {
        Command::Synth(a) => cmd::data::synth(&ctx, a),
        Command::Features(a) => cmd::data::features(&ctx, a),
        Command::Embed(a) => cmd::data::embed(&ctx, a),
        Command::Split(a) => cmd::data::split(&ctx, a),
        Command::Train(a) => cmd::model::train(&ctx, a),
        Command::Eval(a) => cmd::model::eval(&ctx, a),
        Command::Search(a) => cmd::model::search(&ctx, a),
        Command::Analyze(a) => cmd::data::analyze(&ctx, a),
        Command::Bench(a) => cmd::model::bench(&ctx, a),
        Command::Hierarchy(a) => cmd::data::hierarchy(&ctx, a),
        Command::Rerun(_) => unreachable!("resolved before execution"),
    }
}

/// Replaces a `rerun` invocation with the arguments recorded in the manifest,
/// keeping the current `--out`.
fn resolve_rerun(cli: Cli) -> Result<(Cli, Vec<String>)> {
    let Command::Rerun(r) = &cli.command else {
        let argv = std::env::args().collect();
        return Ok((cli, argv));
    };
    let manifest: serde_json::Value = input::read_json(&r.manifest)?;
    let argv: Vec<String> = serde_json::from_value(manifest["argv"].clone())
        .with_context(|| format!("{} has no argv", r.manifest.display()))?;
    let mut replay = Cli::try_parse_from(&argv).context("parsing recorded arguments")?;
    if matches!(replay.command, Command::Rerun(_)) {
        anyhow::bail!("manifest records another rerun");
    }
    replay.out = cli.out;
    Ok((replay, argv))
}

fn run(cli: Cli) -> Result<()> {
    let (cli, argv) = resolve_rerun(cli)?;
    if let Some(jobs) = cli.jobs {
        anyhow::ensure!(jobs > 0, "--jobs must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let artifacts = execute(&cli)?;
    let info = RunInfo {
        command: cli.command.name(),
        argv: &argv,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    output::commit(&cli.out, &artifacts, &info)?;
    for line in &artifacts.summary {
        println!("{line}");
    }
    println!("wrote {} files to {}", artifacts.files.len() + 1, cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
