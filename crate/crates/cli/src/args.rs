use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tracing_subscriber::filter::LevelFilter;

#[derive(Debug, Parser)]
#[command(name = "kinalign", version, about = "Synthetic rigid-body video corpora, alignment losses, and trajectory scoring")]
pub struct Cli {
    /// off, error, warn, info, debug, or trace; logs go to stderr as JSON
    #[arg(long, global = true, default_value = "info")]
    pub log_level: LevelFilter,

    /// Seed for everything random; echoed into every JSON output
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of simulated, rendered scenes (resumable)
    Generate(GenerateArgs),
    /// Simulate one scene, print its diagnostics, optionally write it as a sample
    Simulate(SimulateArgs),
    /// Decode and check every sample listed in a dataset manifest
    Validate(ValidateArgs),
    /// Alignment and depth losses on tensor files or built-in fixtures
    Losses {
        #[command(subcommand)]
        command: LossesCommand,
    },
    /// Score object trajectories of a sample or a directory of mask PNGs
    EvalPis(EvalPisArgs),
    /// Print projected kinematics of a projectile seen by a fronto-parallel camera
    Project(ProjectArgs),
}

/// `64` for 64×64 or `WxH`.
pub fn parse_resolution(s: &str) -> Result<[u32; 2], String> {
    let parse = |v: &str| -> Result<u32, String> {
        match v.trim().parse::<u32>() {
            Ok(0) | Err(_) => Err(format!("'{v}' is not a positive integer")),
            Ok(n) => Ok(n),
        }
    };
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok([parse(w)?, parse(h)?]),
        None => parse(s).map(|n| [n, n]),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// TOML sampling preset; keys not given keep their defaults
    #[arg(long)]
    pub preset: Option<PathBuf>,

    /// Frame size, `N` or `WxH` [default: 512]
    #[arg(long, value_parser = parse_resolution)]
    pub res: Option<[u32; 2]>,

    /// Frames per clip [default: 90]
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub frames: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 3000, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,

    /// Dataset root
    #[arg(long, env = "KINALIGN_OUT", default_value = "dataset")]
    pub out: PathBuf,

    /// 0 uses every available core
    #[arg(long, env = "KINALIGN_WORKERS", default_value_t = 0)]
    pub workers: usize,

    #[command(flatten)]
    pub scene: SceneArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,

    /// Also render and write the sample under this dataset root
    #[arg(long, env = "KINALIGN_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, env = "KINALIGN_OUT", default_value = "dataset")]
    pub root: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum LossesCommand {
    /// Central finite-difference check of every analytic gradient
    Gradcheck(GradcheckArgs),
    /// Evaluate the objective and its components
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Check every loss
    #[arg(long)]
    pub all: bool,

    /// Check only these losses (e.g. phys_loss,pixel_loss)
    #[arg(long, value_delimiter = ',', conflicts_with = "all")]
    pub only: Vec<String>,

    /// Random inputs per loss
    #[arg(long, default_value_t = 20)]
    pub cases: usize,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    /// Independent random student/teacher and depth pairs
    Random,
    /// Identical student/teacher; affine-related depth pair
    Aligned,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Include the Gram relational term
    #[arg(long)]
    pub phys: bool,

    /// Include the depth term
    #[arg(long)]
    pub depth: bool,

    /// Student features (B, t, h, w, D) as .f32g
    #[arg(long, requires = "teacher")]
    pub student: Option<PathBuf>,
    #[arg(long, requires = "student")]
    pub teacher: Option<PathBuf>,

    /// Latents (B, C, T, H, W) and depth maps (B, 1, T, H, W) as .f32g
    #[arg(long, requires_all = ["target_latent", "pred_depth", "target_depth"])]
    pub pred_latent: Option<PathBuf>,
    #[arg(long, requires = "pred_latent")]
    pub target_latent: Option<PathBuf>,
    #[arg(long, requires = "pred_latent")]
    pub pred_depth: Option<PathBuf>,
    #[arg(long, requires = "pred_latent")]
    pub target_depth: Option<PathBuf>,

    /// Built-in inputs for terms without tensor files
    #[arg(long, value_enum, default_value = "random")]
    pub fixture: Fixture,

    /// Fixture clip length before truncation to a whole number of tubelets
    #[arg(long, default_value_t = 49)]
    pub frames: usize,

    /// Teacher temporal patch size
    #[arg(long, default_value_t = 2)]
    pub tubelet: usize,

    /// Flow-matching loss supplied by the caller
    #[arg(long, default_value_t = 0.0)]
    pub l_fm: f64,

    #[arg(long, default_value_t = 0.25)]
    pub lambda_phys: f64,

    #[arg(long, default_value_t = 1.0)]
    pub lambda_3d: f64,

    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,

    /// Depth weights: latent,pixel,structure,temporal
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [1.0, 1.0, 0.5, 0.5])]
    pub beta: Vec<f64>,

    /// Write gradients as .f32g files into this directory
    #[arg(long)]
    pub grad_out: Option<PathBuf>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["sample", "masks"]))]
pub struct EvalPisArgs {
    /// Sample directory (fps and contact frames come from its metadata)
    #[arg(long)]
    pub sample: Option<PathBuf>,

    /// Directory of id-mask PNGs, one per frame, in file-name order
    #[arg(long, requires = "fps")]
    pub masks: Option<PathBuf>,

    #[arg(long, conflicts_with = "sample")]
    pub fps: Option<f64>,

    #[arg(long, default_value_t = kinalign::pis::DEFAULT_EPSILON)]
    pub epsilon: f64,

    /// Write per-frame determinant values as CSV
    #[arg(long)]
    pub series: Option<PathBuf>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// m/s
    #[arg(long, default_value_t = 5.0)]
    pub v0: f64,

    /// Launch angle above the horizontal
    #[arg(long, default_value_t = 45.0)]
    pub theta_deg: f64,

    /// m/s²
    #[arg(long, default_value_t = 9.81)]
    pub g: f64,

    /// px
    #[arg(long, default_value_t = 500.0)]
    pub focal: f64,

    /// m, camera distance to the plane of motion
    #[arg(long, default_value_t = 6.0)]
    pub depth: f64,

    #[arg(long, default_value_t = 24.0)]
    pub fps: f64,

    /// Rows to print [default: until the projectile returns to launch height]
    #[arg(long)]
    pub frames: Option<usize>,

    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}
