use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mvela::pipeline::{Pipeline, PipelineConfig, Stage, StageStatus};

#[derive(Parser)]
#[command(name = "mvela", version, about = "Landscape features and algorithm selection for mixed-variable problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic problem suite manifest.
    Suite(Common),
    /// Draw initial designs.
    Sample(Common),
    /// Encode and normalize the designs.
    Encode(Common),
    /// Compute landscape features.
    Features(Common),
    /// Run the optimizer portfolio and derive ERT.
    Bench(Common),
    /// Cross-validate the selectors and combination strategies.
    Select(Common),
    /// Write relERT tables and the JSON summary.
    Report(Common),
    /// Run one stage, or every stage in order.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stage: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON pipeline configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn pipeline(common: &Common) -> mvela::Result<Pipeline> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| mvela::Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    }
    Pipeline::new(config)
}

fn run(cli: Cli) -> mvela::Result<()> {
    let (common, stages): (&Common, Vec<Stage>) = match &cli.command {
        Command::Suite(c) => (c, vec![Stage::Suite]),
        Command::Sample(c) => (c, vec![Stage::Sample]),
        Command::Encode(c) => (c, vec![Stage::Encode]),
        Command::Features(c) => (c, vec![Stage::Features]),
        Command::Bench(c) => (c, vec![Stage::Bench]),
        Command::Select(c) => (c, vec![Stage::Select]),
        Command::Report(c) => (c, vec![Stage::Report]),
        Command::Run { common, stage } => match stage {
            Some(s) => (common, vec![s.parse()?]),
            None => (common, Stage::ALL.to_vec()),
        },
    };
    let p = pipeline(common)?;
    for stage in stages {
        let status = p.run_stage(stage)?;
        let note = match status {
            StageStatus::Ran => "done",
            StageStatus::UpToDate => "up to date",
        };
        eprintln!("{stage}: {note}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
