//! Command-line front end for `cbsfs`: argument parsing, configuration, file
//! output and the verification suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use cbsfs::mc::Execution;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Format, Overrides, RunConfig};
use verify::Suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Model(#[from] cbsfs::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cbsfs",
    version,
    about = "Genealogies, site frequency spectra and clonal moments of a critical branching population"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Sample size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub reps: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Condition on this population size instead of drawing it.
    #[arg(long, global = true)]
    pub z0: Option<f64>,
    /// Output file (a directory for `sample`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Run replicates on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            beta: self.beta,
            theta: self.theta,
            mu: self.mu,
            n: self.n,
            reps: self.reps,
            seed: self.seed,
            z0: self.z0,
            out: self.out.clone(),
            format: self.format,
            workers: self.workers,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let exec = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        RunConfig::resolve(&base.merge(&self.overrides()), exec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RootArg {
    /// Root at the sample's most recent common ancestor.
    Sample,
    /// Extend to the ancestor of the whole population.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SfsMode {
    Expected,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// Average `μ L_k` per replicate.
    Lengths,
    /// Average Poisson mutation counts per replicate.
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClonalMode {
    Analytic,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    /// `E[Z_cl^{n−1} R]`
    ZpowR,
    /// `E[Z_cl^n]`
    Zpow,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample genealogies: Newick trees plus a JSON replay record per replicate.
    Sample {
        #[arg(long, value_enum, default_value = "sample")]
        root: RootArg,
    },
    /// Expected or simulated site frequency spectrum.
    Sfs {
        #[arg(long, value_enum, default_value = "expected")]
        mode: SfsMode,
        #[arg(long, value_enum, default_value = "lengths")]
        estimator: Estimator,
    },
    /// Mean density of mutations by carried frequency mass.
    Density {
        /// Explicit grid; overrides the log-spaced one.
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        r_min: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// First-order spectrum distortion g1(z, u) on a uniform u grid.
    G1 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        z: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Moments of the clonal subpopulation for n = 1..=n-max.
    Clonal {
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[arg(long, value_enum, default_value = "analytic")]
        mode: ClonalMode,
        #[arg(long, value_enum, default_value = "zpow-r")]
        statistic: StatisticArg,
    },
    /// Run a verification suite; exit status 1 if any check fails.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

/// Runs a parsed command. `Ok(false)` means a verification check failed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = cli.global.resolve()?;
    cbsfs::mc::with_workers(cfg.workers, || commands::dispatch(&cli.command, &cfg))
}
