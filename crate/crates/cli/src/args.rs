use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "logcap", version, about = "Logarithmic capacity of compact planar sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity of a set bounded by Jordan curves described in a JSON spec.
    Capacity(CapacityArgs),
    /// Capacity of a union of disjoint real intervals.
    Intervals(IntervalsArgs),
    /// Capacities of Cantor-type sets and their extrapolated limit.
    Cantor(CantorArgs),
    /// Evaluate a closed-form capacity or special function.
    Oracle(OracleArgs),
    /// Error against a known capacity for a list of node counts (CSV).
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Relative GMRES tolerance.
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
    /// Maximum GMRES iterations.
    #[arg(long, default_value_t = 100)]
    pub maxit: usize,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Domain spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Nodes per component (even); overrides the spec.
    #[arg(long)]
    pub n: Option<usize>,
    /// Grading exponent for components with corners; overrides the spec.
    #[arg(long)]
    pub grading_p: Option<u32>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output file for the result JSON (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct OpenUpArgs {
    /// Nodes per ellipse during the open-up iteration.
    #[arg(long, default_value_t = 64)]
    pub n_open: usize,
    /// Nodes per ellipse for the capacity stage (default 256 up to 16 intervals, else 64).
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// Minor to major axis ratio of the preimage ellipses.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    /// Stopping tolerance of the open-up iteration.
    #[arg(long, default_value_t = 1e-14)]
    pub eps: f64,
    /// Maximum open-up iterations.
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct IntervalsArgs {
    /// JSON list of `[a, b]` pairs.
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub open_up: OpenUpArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the open-up defect per iteration.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CantorArgs {
    /// Length ratio in (0, 0.5]; 1/3 gives the middle-third set.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub r: f64,
    #[arg(long, default_value_t = 8)]
    pub kmax: usize,
    #[command(flatten)]
    pub open_up: OpenUpArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Levels left out of the line fit.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of `k, d_k, p(k), exp(p(k))`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// One of: disk, half_disk, ellipse, segment, square, symmetric_intervals,
    /// two_equal_disks, two_unequal_disks, two_intervals, interval_pair,
    /// cantor_f, elliptic_k, inverse_sn, theta.
    #[arg(long)]
    pub formula: String,
    /// Comma-separated parameters.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Comma-separated even node counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long)]
    pub grading_p: Option<u32>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
