//! `pkgraph`: command-line driver for the readmission pipeline.
//!
//! Stages read and write fixed files under the configured working directory:
//! `generate` → `preprocess` → `build-graphs` → `transform` → `train` / `evaluate` /
//! `ablate` → `report`. `run` executes all of them in order.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pkgraph::gnn::Arch;
use pkgraph::graphx::{Direction, GraphVersion, Version};

use config::{Experiment, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "pkgraph",
    disable_version_flag = true,
    about = "Person-centric knowledge graphs for 30-day readmission prediction"
)]
struct Cli {
    /// Pipeline configuration (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every stage, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Working directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Restrict to one graph version.
    #[arg(long, global = true, value_enum)]
    version: Option<VersionArg>,

    /// Restrict to one edge direction.
    #[arg(long, global = true, value_enum)]
    direction: Option<DirectionArg>,

    /// Restrict to one architecture.
    #[arg(long, global = true, value_enum)]
    arch: Option<ArchArg>,

    /// Restrict to one final-layer variant.
    #[arg(long, global = true, value_parser = ["1", "2"])]
    variant: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the admission cohort.
    Generate,
    /// Group codes, label readmissions, apply exclusions and the cohort filter.
    Preprocess,
    /// Write one N-Triples graph per admission.
    BuildGraphs,
    /// Convert graphs to numeric form for each configured graph version.
    Transform,
    /// Cross-validate the graph models of the experiment matrix.
    Train,
    /// Cross-validate the classical baselines.
    Evaluate,
    /// Facet-exclusion study of one configuration.
    Ablate,
    /// Summarize every results file.
    Report,
    /// All stages in order.
    Run,
}

#[derive(Clone, Copy, ValueEnum)]
enum VersionArg {
    V1,
    V2,
    V3,
    V4,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Directed,
    Undirected,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Sage,
    Gat,
}

impl From<VersionArg> for Version {
    fn from(v: VersionArg) -> Self {
        match v {
            VersionArg::V1 => Version::V1,
            VersionArg::V2 => Version::V2,
            VersionArg::V3 => Version::V3,
            VersionArg::V4 => Version::V4,
        }
    }
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Directed => Direction::Directed,
            DirectionArg::Undirected => Direction::Undirected,
        }
    }
}

impl From<ArchArg> for Arch {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Sage => Arch::Sage,
            ArchArg::Gat => Arch::Attention,
        }
    }
}

impl Cli {
    fn load_config(&self) -> anyhow::Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.set_seed(seed);
        }
        if let Some(out) = &self.out {
            config.workdir = out.clone();
        }
        let m = &mut config.experiments;
        if let Some(v) = self.version {
            m.versions = vec![Version::from(v).name().to_string()];
            config.ablation.version = Version::from(v).name().to_string();
        }
        if let Some(d) = self.direction {
            m.directions = vec![Direction::from(d).name().to_string()];
            config.ablation.direction = Direction::from(d).name().to_string();
        }
        if let Some(a) = self.arch {
            let name = match a {
                ArchArg::Sage => "sage",
                ArchArg::Gat => "gat",
            };
            m.archs = vec![name.to_string()];
            config.ablation.arch = name.to_string();
        }
        if let Some(v) = &self.variant {
            m.variants = vec![v.clone()];
            config.ablation.variant = v.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let config = cli.load_config()?;
    let experiments: Vec<Experiment> = config.experiments.expand()?;
    let versions: Vec<GraphVersion> = config.experiments.graph_versions()?;
    let target = config.ablation.experiment()?;
    let report = |config: &PipelineConfig| -> anyhow::Result<()> {
        print!("{}", stages::cmd_report(config)?);
        Ok(())
    };
    match cli.command {
        Command::Generate => stages::cmd_generate(&config),
        Command::Preprocess => stages::cmd_preprocess(&config),
        Command::BuildGraphs => stages::cmd_build_graphs(&config),
        Command::Transform => stages::cmd_transform(&config, &versions),
        Command::Train => stages::cmd_train(&config, &experiments),
        Command::Evaluate => stages::cmd_evaluate(&config),
        Command::Ablate => stages::cmd_ablate(&config, target),
        Command::Report => report(&config),
        Command::Run => {
            stages::cmd_generate(&config)?;
            stages::cmd_preprocess(&config)?;
            stages::cmd_build_graphs(&config)?;
            stages::cmd_transform(&config, &versions)?;
            stages::cmd_train(&config, &experiments)?;
            stages::cmd_evaluate(&config)?;
            report(&config)
        }
    }
}

const EXIT_VALIDATION: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numeric =
                err.chain().any(|e| matches!(e.downcast_ref::<pkgraph::Error>(), Some(pkgraph::Error::Numeric { .. })));
            ExitCode::from(if numeric { EXIT_NUMERIC } else { EXIT_VALIDATION })
        }
    }
}
