//! `graphprod`: command-line front end for the graph-product toolkit.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::ToolkitConfig;
use crate::output::Run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] graphprod::GraphError),
    #[error(transparent)]
    Word(#[from] graphprod::WordError),
    #[error(transparent)]
    Domain(#[from] graphprod::DomainError),
    #[error(transparent)]
    Cayley(#[from] graphprod::CayleyError),
    #[error(transparent)]
    Hhs(#[from] graphprod::HhsError),
    #[error(transparent)]
    Morse(#[from] graphprod::MorseError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Graph(_) => "graph",
            CliError::Word(_) => "word",
            CliError::Domain(_) => "domain",
            CliError::Cayley(_) => "cayley",
            CliError::Hhs(_) => "hhs",
            CliError::Morse(_) => "morse",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "graphprod", version, about = "Experiments on graph products of groups")]
pub struct Cli {
    /// JSON configuration (`schema: 1`).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides GPG_OUTPUT_DIR and the config.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for sampled quantities; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Standard,
    /// Cone off every vertex star.
    Cone,
    /// Cone off the star of every subgraph with nonempty link.
    Family,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the normal form of a word.
    Normalize { word: String },
    /// Multiply two words.
    Mul { left: String, right: String },
    /// Build a ball of the Cayley graph and write its points and edges.
    Ball(BallArgs),
    /// Four-point hyperbolicity constant of a ball.
    Delta(DeltaArgs),
    /// List parallelism classes or relate two of them.
    Classes(ClassesArgs),
    /// Check containers of all classes up to a word-length depth.
    CleanContainers {
        #[arg(long, default_value_t = 1)]
        depth: u64,
    },
    /// Subgraphs with nonempty link, in ShortLex order.
    ConingFamily,
    /// Stability verdict for the cyclic subgroup of ELEMENT.
    Stability(StabilityArgs),
    /// Word length and cone distance of the powers of ELEMENT.
    Distortion(DistortionArgs),
    /// Finite hierarchically hyperbolic instances.
    #[command(subcommand)]
    Hhs(HhsCommand),
    /// Morse and detectability probes.
    #[command(subcommand)]
    Probe(ProbeCommand),
}

#[derive(Debug, Args)]
pub struct BallArgs {
    #[arg(long)]
    pub radius: u64,
    #[arg(long, value_enum, default_value_t = Metric::Standard)]
    pub metric: Metric,
    #[arg(long, default_value = "1")]
    pub center: String,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    #[arg(long)]
    pub radius: u64,
    #[arg(long, value_enum, default_value_t = Metric::Standard)]
    pub metric: Metric,
    /// Quadruple budget; overrides the config.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ClassesArgs {
    /// List classes `[gΛ]` with `|g|` up to `--length`.
    #[arg(long, conflicts_with = "relation")]
    pub list: bool,
    #[arg(long, default_value_t = 0)]
    pub length: u64,
    /// Relation between two class literals `WORD@v1,v2`.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub relation: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    pub element: String,
    #[arg(long, default_value_t = 24)]
    pub nmax: u64,
    /// Treat ELEMENT as a comma-separated list of subgroup generators.
    #[arg(long)]
    pub subgroup: bool,
}

#[derive(Debug, Args)]
pub struct DistortionArgs {
    pub element: String,
    #[arg(long)]
    pub nmax: u64,
    /// Fixed radii; otherwise the configured schedule.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<u64>>,
}

#[derive(Debug, Subcommand)]
pub enum HhsCommand {
    /// Check all twelve axioms and report minimal constants.
    Check {
        file: PathBuf,
        /// Claimed constant; overrides the file.
        #[arg(long = "E")]
        e: Option<u64>,
    },
    /// Pass to the maximized structure.
    Maximize {
        file: PathBuf,
        #[arg(long = "M", alias = "m")]
        m: Option<u64>,
    },
    /// Fit the distance formula at a threshold.
    Fit {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        threshold: u64,
    },
    /// Write a built-in instance.
    Fixture {
        #[arg(value_enum)]
        name: Fixture,
        #[arg(long = "E", default_value_t = 2)]
        e: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Grid,
    GridTransverse,
    GridMissingRho,
    GridConstantPi,
    GridShrunkV,
    Single,
}

#[derive(Debug, Subcommand)]
pub enum ProbeCommand {
    /// Concatenate geodesic pieces and fit the result.
    Mltg {
        /// Pieces as words separated by `;`, each walked from the previous end.
        #[arg(long, conflicts_with = "spiral")]
        pieces: Option<String>,
        /// Square spiral `SIDE,WINDINGS` (first two vertices).
        #[arg(long, value_delimiter = ',')]
        spiral: Option<Vec<u64>>,
        #[arg(long)]
        window: usize,
    },
    /// Fit the orbit of ELEMENT in the word and coned metrics.
    Detect {
        element: String,
        #[arg(long)]
        nmax: u64,
        #[arg(long)]
        radius: Option<u64>,
    },
    /// Morse gauge of the path spelling ELEMENT^POWER letter by letter.
    Gauge {
        element: String,
        #[arg(long, default_value_t = 1)]
        power: u64,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let loaded = match &cli.config {
        Some(path) => ToolkitConfig::load(path).map(|(c, bytes)| (c, Some(bytes))),
        None => Ok((ToolkitConfig::default(), None)),
    };
    let (config, bytes) = match loaded {
        Ok(x) => x,
        Err(e) => {
            // Still record the failed run where the output would have gone.
            let mut run = Run::new(&cli, &ToolkitConfig::default(), None, argv);
            return run.fail(&e);
        }
    };
    if let Some(n) = cli.threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let mut run = Run::new(&cli, &config, bytes.as_deref(), argv);
    match commands::dispatch(&cli, &config, &mut run) {
        Ok(()) => run.finish(),
        Err(e) => run.fail(&e),
    }
}
