use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Wireframe ground truth, construction, baselines and evaluation.
#[derive(Debug, Parser)]
#[command(name = "wireframe", version)]
pub struct Cli {
    /// File of `key = value` lines overriding built-in defaults; flags
    /// override the file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the effective configuration in config-file syntax.
    Defaults,
    /// Generate a random line scene.
    Synth(SynthArgs),
    /// Derive ground-truth junctions and the line heat map from a scene.
    DeriveGt(DeriveGtArgs),
    /// Encode junctions into grid targets.
    Encode(EncodeArgs),
    /// Decode grid predictions into junctions.
    Decode(DecodeArgs),
    /// Build a wireframe from junctions and a line heat map.
    Construct(ConstructArgs),
    /// Extract segments from a heat map with a probabilistic Hough transform.
    Hough(HoughArgs),
    /// Precision / recall of predictions against ground truth.
    Eval(EvalArgs),
    /// Junction loss of a predicted grid against a scene.
    Loss(LossArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 320)]
    pub width: usize,
    #[arg(long, default_value_t = 320)]
    pub height: usize,
    #[arg(long, default_value_t = 5)]
    pub min_segments: usize,
    #[arg(long, default_value_t = 30)]
    pub max_segments: usize,
}

#[derive(Debug, Args)]
pub struct DeriveGtArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out_junctions: PathBuf,
    #[arg(long)]
    pub out_heatmap: PathBuf,
    #[arg(long)]
    pub merge_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Junction file to encode.
    #[arg(long, conflicts_with = "scene", required_unless_present = "scene")]
    pub junctions: Option<PathBuf>,
    /// Scene whose derived junctions are encoded.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub merge_radius: Option<f64>,
    /// Cells per side.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub tau_c: Option<f64>,
    #[arg(long)]
    pub tau_b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub junctions: PathBuf,
    #[arg(long)]
    pub heatmap: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub tau_c: Option<f64>,
    #[arg(long)]
    pub tau_b: Option<f64>,
    #[arg(long)]
    pub delta_ray: Option<f64>,
    #[arg(long)]
    pub nms_radius: Option<f64>,
    #[arg(long)]
    pub boundary_frac: Option<f64>,
    #[arg(long)]
    pub kappa_min: Option<f64>,
    /// Longest unsupported run (pixels) when walking an unmatched ray, or
    /// `none`.
    #[arg(long)]
    pub max_ray_gap: Option<String>,
}

#[derive(Debug, Args)]
pub struct HoughArgs {
    #[arg(long)]
    pub heatmap: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long)]
    pub min_length: Option<f64>,
    #[arg(long)]
    pub max_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Junctions,
    Lines,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub kind: EvalKind,
    /// Ground-truth file, or directory of `.json` files.
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction file, or directory with the same file names as `--gt`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub tol_frac: Option<f64>,
    /// `start:stop:step` or a comma-separated list of score thresholds.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub pred_grid: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    /// Four comma-separated weights.
    #[arg(long)]
    pub weights: Option<String>,
    /// Cap on the negative:positive cell ratio (`inf` keeps every cell).
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub merge_radius: Option<f64>,
    /// Predicted line heat map, adds the heat-map term to the report.
    #[arg(long)]
    pub pred_heatmap: Option<PathBuf>,
}
