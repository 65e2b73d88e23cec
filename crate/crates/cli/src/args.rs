use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "blip", version, about = "Resolution-adaptive signal detection")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "BLIP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build candidate groups.
    #[command(subcommand)]
    Groups(GroupsCmd),
    /// Estimate group PIPs from posterior samples or SuSiE alphas.
    Pips(PipsArgs),
    /// Select disjoint discoveries under an error-rate constraint.
    Solve(SolveArgs),
    /// Draw posterior samples with a spike-and-slab Gibbs sampler.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Generate a seeded regression data set.
    Generate(GenerateArgs),
    /// Run a simulation study from a TOML config.
    Simulate(SimulateArgs),
    /// Score a detection file against the truth.
    Eval(EvalArgs),
}

#[derive(Subcommand, Debug)]
pub enum GroupsCmd {
    /// Every window of consecutive locations up to a maximum size.
    Contiguous {
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, conflicts_with = "p")]
        locations: Option<String>,
        /// Shorthand for `--locations 0..p-1`.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 25)]
        max_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hierarchical clustering of the design's columns.
    Cluster {
        /// Headerless numeric CSV, one column per location.
        #[arg(long)]
        design: PathBuf,
        #[arg(long, value_enum, default_value_t = LinkageArg::Average)]
        linkage: LinkageArg,
        #[arg(long, default_value_t = 25)]
        max_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spheres or cubes centered on a scaled lattice, one family per radius.
    Lattice {
        /// `min:max:count`, log-spaced.
        #[arg(long, conflicts_with = "radii")]
        radii_log: Option<String>,
        /// Comma-separated radii.
        #[arg(long)]
        radii: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// `lo:hi` for every axis.
        #[arg(long, default_value = "0:1")]
        bounds: String,
        #[arg(long, value_enum, default_value_t = ShapeArg::Sphere)]
        shape: ShapeArg,
        /// Write every region instead of the family description.
        #[arg(long)]
        materialize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contiguity and clustering groups over a grid of PIP thresholds.
    DefaultRegression {
        #[arg(long)]
        samples: PathBuf,
        /// Design matrix CSV (adds correlation clustering).
        #[arg(long, conflicts_with = "data")]
        design: Option<PathBuf>,
        /// Regression CSV with the response in the first column.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        max_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum LinkageArg {
    Single,
    Average,
    Complete,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ShapeArg {
    Sphere,
    Cube,
}

#[derive(Args, Debug)]
pub struct PipsArgs {
    #[arg(long, conflicts_with = "susie_alphas", required_unless_present = "susie_alphas")]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub susie_alphas: Option<PathBuf>,
    #[arg(long, conflicts_with = "lattice", required_unless_present = "lattice")]
    pub groups: Option<PathBuf>,
    /// Lattice family file from `groups lattice`.
    #[arg(long, requires = "samples")]
    pub lattice: Option<PathBuf>,
    /// Write the groups hit by a lattice query here.
    #[arg(long, requires = "lattice")]
    pub out_groups: Option<PathBuf>,
    /// Subtract this from every PIP (clamped at zero).
    #[arg(long, default_value_t = 0.0)]
    pub lower_bound: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorArg {
    Fdr,
    LocalFdr,
    Pfer,
    Fwer,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum WeightArg {
    InverseSize,
    InverseRadius,
    InverseCountInterval,
    LogInverseSize,
    Constant,
    /// The `weight` field stored on each group.
    Stored,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub groups: PathBuf,
    /// PIP table; defaults to the `pip` fields stored on the groups.
    #[arg(long)]
    pub pips: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub error: ErrorArg,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub v: Option<f64>,
    #[arg(long, value_enum, default_value_t = WeightArg::InverseSize)]
    pub weight: WeightArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep groups below the error rate's PIP floor.
    #[arg(long)]
    pub no_prefilter: bool,
    #[arg(long)]
    pub no_prenarrow: bool,
    /// Posterior samples for the empirical FWER check.
    #[arg(long)]
    pub fwer_samples: Option<PathBuf>,
    #[arg(long, default_value_t = 0.001)]
    pub grid_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SampleCmd {
    /// Linear spike-and-slab.
    Lss(SampleArgs),
    /// Probit spike-and-slab; the response column must be 0/1.
    Pss(SampleArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetArg {
    Well,
    Misspec,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Regression CSV with the response in the first column.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    /// Defaults to a tenth of the iterations.
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub block_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PresetArg::Misspec)]
    pub preset: PresetArg,
    /// Fixed values for `--preset well`.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    #[arg(long, default_value_t = 0.95)]
    pub p0: f64,
    /// Start from a random active set.
    #[arg(long)]
    pub random_init: bool,
    /// Write the coefficient trace (one CSV row per kept draw).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// AR order of the design.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long)]
    pub probit: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Regression CSV (response first).
    #[arg(long)]
    pub out: PathBuf,
    /// Truth file for `eval`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write zero runtimes so the output depends only on the seed.
    #[arg(long)]
    pub no_runtime: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub detections: PathBuf,
    /// JSON `{"indices": [...]}` or `{"points": [[...], ...]}`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value_t = WeightArg::InverseSize)]
    pub weight: WeightArg,
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
