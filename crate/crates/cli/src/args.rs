use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "csfmm", version, about = "Fast summation of pairwise interactions on the sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the cell centres and areas of a sphere partition.
    Grid(GridArgs),
    /// Evaluate `φ(x_i) = Σ_j K(x_i, x_j) w_j` for one kernel.
    Sum(SumArgs),
    /// Solve a Poisson or biharmonic problem by Green's function convolution.
    Solve(SolveArgs),
    /// Integrate the barotropic vorticity equation with remeshing.
    Bve(BveArgs),
    /// Self-attraction and loading potential of a sea-surface height field.
    Sal(SalArgs),
    /// Discretisation and approximation error against grid level or degree.
    Convergence(ConvergenceArgs),
    /// Runtime of each method across grid levels.
    Bench(BenchArgs),
}

/// Traversal and kernel options shared by the summing subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct Tuning {
    /// laplace, biharmonic, biot_savart or sal.
    #[arg(long)]
    pub kernel: Option<String>,
    /// direct, cstc or csfmm.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub mac: Option<f64>,
    /// Interpolation degree n.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Maximum leaf size (default 4n²).
    #[arg(long)]
    pub n0: Option<usize>,
    /// Keep cluster rectangles at their midpoint-split size.
    #[arg(long)]
    pub no_shrink: bool,
    /// Worker threads; 1 gives bitwise reproducible output.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Include tree statistics in the report.
    #[arg(long)]
    pub stats: bool,
}

/// Where particles come from.
#[derive(Args, Debug, Clone, Default)]
pub struct Input {
    /// Built-in grid as `kind:level`, e.g. `icosahedral:5`.
    #[arg(long)]
    pub grid: Option<String>,
    /// Particle CSV with header `x,y,z,weight` or `lon,lat,area,value`.
    #[arg(long, conflicts_with = "grid")]
    pub particles: Option<PathBuf>,
    /// Field sampled on a built-in grid: one, band, random, or yNM.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SalCoefficients {
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    /// Seawater to mean Earth density.
    #[arg(long)]
    pub rho_ratio: Option<f64>,
    /// series (default) or published.
    #[arg(long)]
    pub sal_form: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Output {
    /// Output CSV.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Alternative to `--kind/--level`.
    #[arg(long, conflicts_with_all = ["kind", "level"])]
    pub grid: Option<String>,
    /// Field to attach (default one).
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// xyz (`x,y,z,weight` with weight = area·field) or lonlat.
    #[arg(long, default_value = "xyz")]
    pub format: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SumArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub sal: SalCoefficients,
    /// `direct`, or a potentials CSV from an earlier run.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct BveArgs {
    /// Grid as `kind:level` (default icosahedral:4).
    #[arg(long)]
    pub grid: Option<String>,
    /// rossby_haurwitz or gaussian_vortex.
    #[arg(long, default_value = "rossby_haurwitz")]
    pub initial: String,
    /// Time step in days.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Snapshot and log cadence in steps (default: only the last step).
    #[arg(long)]
    pub every: Option<usize>,
    /// Directory for `step_NNNNN.csv` snapshots.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Carry the passive tracer `z`.
    #[arg(long)]
    pub tracer: bool,
    /// pinned or least_squares.
    #[arg(long)]
    pub fit: Option<String>,
    /// Neighbours per remeshing fit.
    #[arg(long)]
    pub stencil: Option<usize>,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Write the JSON log here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SalArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub sal: SalCoefficients,
    /// `direct`, or a potentials CSV from an earlier run.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    /// Grid kind (default icosahedral).
    #[arg(long)]
    pub kind: Option<String>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    pub levels: Vec<u32>,
    /// Comma-separated degrees for a degree sweep.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Vec<usize>,
    /// Right-hand side with a known solution (default y43).
    #[arg(long)]
    pub field: Option<String>,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6,7")]
    pub levels: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "direct,cstc,csfmm")]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "laplace")]
    pub kernels: Vec<String>,
    /// Timed repetitions after one warm-up; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Skip the direct method above this level.
    #[arg(long, default_value_t = 6)]
    pub max_direct_level: u32,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub output: Output,
}
