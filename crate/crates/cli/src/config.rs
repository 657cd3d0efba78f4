use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Serialize, Debug, Clone)]
#[command(name = "detpro", version, about = "Exact computation and sampling for determinantal probability measures")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Serialize, Debug, Clone)]
pub struct Common {
    /// Run seed. Every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Samples, probes or trials; each subcommand has its own default.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Validation tolerance for input kernels.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Ground-set cap for exhaustive enumeration (at most 16).
    #[arg(long, global = true, default_value_t = 16)]
    pub cap: usize,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct KernelInput {
    /// Kernel matrix file.
    #[arg(long)]
    pub kernel: PathBuf,
    /// Optional labels file, one label per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct FamilyInput {
    /// gue, cue, ginibre, disk or sphere.
    #[arg(long)]
    pub family: String,
    /// Number of points.
    #[arg(long)]
    pub n: usize,
}

#[derive(Subcommand, Serialize, Debug, Clone)]
pub enum Command {
    /// Certify a kernel as a positive contraction and report its spectrum.
    Validate(KernelInput),
    /// Write the full subset law of a kernel as CSV.
    Enumerate(KernelInput),
    /// Draw exact samples from a kernel.
    Sample(KernelInput),
    /// Sample uniform (conductance-weighted) spanning trees of a graph.
    Ust {
        /// Edge-list file.
        #[arg(long)]
        graph: PathBuf,
    },
    /// Sample an orthogonal polynomial ensemble and check it.
    Ope {
        #[command(flatten)]
        family: FamilyInput,
        /// Intensity histogram bins.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Probe the strongly Rayleigh inequality of a kernel's law.
    CheckSr(KernelInput),
    /// Exhaustive negative association check.
    CheckNa {
        #[arg(long, conflicts_with = "graph")]
        kernel: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Use the spanning-tree law of a graph instead of a kernel.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Element indices of one side (0-based, comma-separated). Default: every admissible split.
        #[arg(long, value_delimiter = ',')]
        split: Option<Vec<usize>>,
    },
    /// Decide stochastic domination P^{Q1} ≼ P^{Q2} by a monotone coupling.
    Coupling {
        #[arg(long)]
        kernel1: PathBuf,
        #[arg(long)]
        kernel2: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Scan random contraction pairs for entropy concavity violations.
    ScanEntropy {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        /// Trials per JSON line.
        #[arg(long, default_value_t = 1000)]
        batch: u64,
    },
    /// Search for a union coupling of two orthogonal projections.
    UnionCoupling {
        #[arg(long, requires = "kernel2")]
        kernel1: Option<PathBuf>,
        #[arg(long)]
        kernel2: Option<PathBuf>,
        /// Random mode: ground-set size.
        #[arg(long, conflicts_with = "kernel1")]
        dim: Option<usize>,
        /// Random mode: ranks r1,r2 of the two projections.
        #[arg(long, value_delimiter = ',', requires = "dim")]
        ranks: Option<Vec<usize>>,
    },
    /// Sandwich a circulant kernel between geometric-mean product measures.
    GmCheck {
        /// Symbol values f(j/m), comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        symbol: Vec<f64>,
    },
    /// Discrete kernel reproducing the cell counts of an ensemble.
    Discretize {
        #[command(flatten)]
        family: FamilyInput,
        /// Cell boundaries in the family coordinate, comma-separated (e.g. 0,0.5,1 or -inf,0,inf).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        cells: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Enumerate(_) => "enumerate",
            Command::Sample(_) => "sample",
            Command::Ust { .. } => "ust",
            Command::Ope { .. } => "ope",
            Command::CheckSr(_) => "check-sr",
            Command::CheckNa { .. } => "check-na",
            Command::Coupling { .. } => "coupling",
            Command::ScanEntropy { .. } => "scan-entropy",
            Command::UnionCoupling { .. } => "union-coupling",
            Command::GmCheck { .. } => "gm-check",
            Command::Discretize { .. } => "discretize",
        }
    }
}
