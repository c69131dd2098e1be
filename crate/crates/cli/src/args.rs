use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "abf", version, about = "Space-variant elliptical box-spline filtering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a graymap with a constant, elliptical, map-driven or edge-adaptive kernel.
    Filter(FilterArgs),
    /// Render a kernel and write its mesh, shift and covariance to a sidecar.
    Kernel(KernelArgs),
    /// Compare the fast engine against the rasterized reference filter.
    Compare(CompareArgs),
    /// Time the engine over a ladder of constant scales.
    Bench(BenchArgs),
    /// Build an edge-adaptive scale map from the structure tensor of an image.
    MapGen(MapGenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    pub fn enabled(self) -> bool {
        self == Toggle::On
    }
}

/// Kernel shape given directly as four scales or as an ellipse.
#[derive(Debug, Clone, Args)]
pub struct KernelShape {
    /// Four directional scales a1,a2,a3,a4.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub scales: Option<Vec<f64>>,
    /// Standard deviation along the ellipse axis at `--theta`.
    #[arg(long)]
    pub sigma1: Option<f64>,
    /// Standard deviation across the ellipse axis (defaults to `--sigma1`).
    #[arg(long, requires = "sigma1")]
    pub sigma2: Option<f64>,
    /// Ellipse orientation in degrees, counter-clockwise from the x axis.
    #[arg(long, requires = "sigma1", allow_negative_numbers = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct Threads {
    /// Worker threads; 1 runs the sequential reference path. Defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scales", "sigma1", "map", "structure_tensor"])))]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub shape: KernelShape,
    /// Per-pixel scale map in SVM4 format.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Derive the map from the input's structure tensor with default settings.
    #[arg(long)]
    pub structure_tensor: bool,
    #[arg(long, value_enum, default_value = "on")]
    pub mean_subtract: Toggle,
    /// Output bit depth; defaults to the input's.
    #[arg(long, value_parser = ["8", "16"])]
    pub depth: Option<String>,
    #[command(flatten)]
    pub threads: Threads,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scales", "sigma1"])))]
pub struct KernelArgs {
    #[command(flatten)]
    pub shape: KernelShape,
    /// Kernel image (graymap, 16-bit, peak normalized to white).
    #[arg(long)]
    pub out: PathBuf,
    /// Text sidecar; defaults to the output path with `.txt` appended.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Samples per pixel along each axis of the rendered kernel.
    #[arg(long, default_value_t = 8)]
    pub oracle_res: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    /// Per-pixel rasterized kernel.
    Reference,
    /// The fast engine itself; reports zero deviation.
    Engine,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").args(["scales", "sigma1", "map", "random_scales"])))]
pub struct CompareArgs {
    /// Input graymap; a seeded random image is used when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub shape: KernelShape,
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Random per-pixel scales drawn uniformly from `lo,hi` (the default source, with 1,4).
    #[arg(long, value_delimiter = ',')]
    pub random_scales: Option<Vec<f64>>,
    /// Size of the random image as `WxH`.
    #[arg(long, default_value = "24x24")]
    pub size: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    /// Oracle samples per pixel along each axis.
    #[arg(long, default_value_t = 32)]
    pub oracle_res: u32,
    /// Largest number of fine oracle cells to visit.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, value_enum, default_value = "reference")]
    pub oracle: Oracle,
    #[command(flatten)]
    pub threads: Threads,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Side length of the square random test image.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    /// Timed runs per rung; the fastest is reported.
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
    /// Uniform scales to time.
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,40")]
    pub ladder: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub threads: Threads,
}

#[derive(Debug, Args)]
pub struct MapGenArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.5)]
    pub tensor_sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_base: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_along: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma_across: f64,
    #[arg(long, default_value_t = 0.05)]
    pub coherence_k: f64,
}
