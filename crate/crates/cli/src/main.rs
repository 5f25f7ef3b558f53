//! `medjn`: median John-Nirenberg computations and checks on finite spaces.
//!
//! Exit codes: 0 when every checked inequality holds, 1 when one fails,
//! 2 on input or usage errors.

mod commands;
mod fixtures;
mod inputs;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "medjn", version, about = "Median-type John-Nirenberg computations on finite metric measure spaces")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Output::Text, global = true)]
    pub output: Output,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Greedy,
}

#[derive(Args)]
pub struct Data {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub function: PathBuf,
}

/// `--set all|id,id,...` or a ball `--center ID --radius R`; the whole space by default.
#[derive(Args)]
pub struct Region {
    #[arg(long)]
    pub set: Option<String>,
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
}

/// Base ball `B0 = B(center, radius)` with dilation `eta`.
#[derive(Args)]
pub struct Base {
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
}

#[derive(Args)]
pub struct Packing {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Solve exactly even above the branch-and-bound candidate limit.
    #[arg(long)]
    pub force_exact: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Doubling constant, dimension and worst ratio certificate.
    Doubling {
        #[arg(long)]
        space: PathBuf,
    },
    /// Maximal s-median of f over a set.
    Median {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        region: Region,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
    },
    /// Median oscillation, or the integral oscillation when --q is given.
    Oscillation {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        region: Region,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Median BMO norm over the balls inside a region.
    Bmo {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        region: Region,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
    },
    /// Median John-Nirenberg norm; with --t, the sup with ball medians as constants.
    JnMedian {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        region: Region,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        packing: Packing,
    },
    /// Integral John-Nirenberg norm.
    JnIntegral {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        region: Region,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        packing: Packing,
    },
    /// Greedy 5-cover of a ball family (the canonical balls of the region by default).
    FiveCover {
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        region: Region,
        /// JSON list of {"center": id, "radius": r}.
        #[arg(long)]
        balls: Option<PathBuf>,
    },
    /// Calderon-Zygmund decomposition of |f| at one level, or nested at two.
    Cz {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        base: Base,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long)]
        lambda: f64,
        /// Upper level for a nested decomposition.
        #[arg(long)]
        lambda_high: Option<f64>,
    },
    /// Both sides of the good-lambda inequality for f centered at its r-median on B0.
    GoodLambda {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        base: Base,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        s: f64,
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
    },
    /// Local John-Nirenberg inequality over a grid of levels.
    VerifyLocalJn {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        p: f64,
        /// Defaults to s0.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long)]
        lambda_grid: Option<String>,
    },
    /// Global John-Nirenberg inequality on a Boman decomposition.
    VerifyGlobalJn {
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long)]
        p: f64,
        /// Defaults to s0.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long)]
        lambda_grid: Option<String>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Check every condition of a Boman decomposition.
    VerifyBoman {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        decomposition: PathBuf,
    },
    /// Lower bound between the median and integral norms, and their ratio.
    Equivalence {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        region: Region,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// Defaults to the local constant for p and the space's c_mu.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Emit generated spaces, functions or Boman decompositions as JSON.
    Generate {
        #[command(subcommand)]
        what: Generate,
    },
    /// Every property suite plus the shipped fixtures.
    VerifyAll {
        #[arg(long, default_value_t = medjn::verify::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weights {
    Uniform,
    Normalized,
    Random,
}

#[derive(Subcommand)]
pub enum Generate {
    /// Uniform grid at (i + 1) * spacing, 1-D or 2-D.
    Grid {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, value_enum, default_value_t = Weights::Uniform)]
        weights: Weights,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Points 1 + sum_j b_j ratio^j over bit strings of length `levels`.
    Cantor {
        #[arg(long)]
        levels: u32,
        #[arg(long, default_value_t = 8.0)]
        ratio: f64,
        #[arg(long, value_enum, default_value_t = Weights::Uniform)]
        weights: Weights,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A sample function: a kind name with defaults, or a JSON object with a "kind" tag.
    Function {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A Boman decomposition of the ball B(center, radius) from balls of a given radius.
    Boman {
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        region: Region,
        #[arg(long)]
        granularity: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli.command) {
        Ok(report) => {
            match cli.output {
                Output::Json => println!("{}", serde_json::to_string_pretty(&report.json).expect("report serializes")),
                Output::Text => print!("{}", report.text.unwrap_or_else(|| render::text(&report.json))),
            }
            match report.violation {
                Some(v) => {
                    eprintln!("violation: {v}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(commands::Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Violation(v)) => {
            eprintln!("violation: {v}");
            ExitCode::from(1)
        }
    }
}
