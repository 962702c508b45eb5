//! `nnr`: sampling, zone fitting and bounded-spectrum reconstruction from
//! the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "nnr", version, about = "Nearly non-redundant image sampling and bounded-spectrum reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum sparsity at an RMS target, or the smallest DFT zone holding an energy fraction.
    Analyze(AnalyzeArgs),
    /// Fit a zone shape to an area fraction or an RMS target and write its mask.
    Fitzone(FitzoneArgs),
    /// Generate a sampling grid and take samples of an image.
    Sample(SampleArgs),
    /// Bounded-spectrum reconstruction from a sample file.
    Reconstruct(ReconstructArgs),
    /// Fit, sample, reconstruct and report redundancy and error in one run.
    Pipeline(PipelineArgs),
    /// Reconstruct occluded pixels.
    Inpaint(InpaintArgs),
    /// Reconstruct an image from random samples of its Fourier spectrum.
    Specrecon(SpecreconArgs),
    /// Recover an occluded image from its Fourier modulus, then in-paint it.
    Phaserec(PhaserecArgs),
    /// Redundancy required by the compressed-sensing bound.
    Csbound(CsboundArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Anchor {
    Corner,
    Centered,
}

#[derive(Args, Clone)]
pub struct ShapeArgs {
    /// rectangle, ellipse, superellipse or pie; `auto` searches all of them when fitting to an RMS target
    #[arg(long, default_value = "ellipse")]
    pub shape: String,
    /// Zone area as a fraction of the spectrum
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Vertical to horizontal semi-axis ratio
    #[arg(long, default_value_t = 1.0)]
    pub aspect: f64,
    /// Super-ellipse exponent
    #[arg(long, default_value_t = nnr_core::zones::DEFAULT_EXPONENT)]
    pub exponent: f64,
    /// Rotation in radians (centered zones only)
    #[arg(long, default_value_t = 0.0)]
    pub orientation: f64,
    /// Pie-sector angular span in radians
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long, value_enum, default_value_t = Anchor::Corner)]
    pub anchor: Anchor,
}

#[derive(Args, Clone)]
pub struct IterArgs {
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Stop when the RMS change between iterates falls below this
    #[arg(long, default_value_t = 1e-4)]
    pub stop_delta: f64,
    #[arg(long, default_value_t = nnr_core::metrics::DEFAULT_KEEP_FRACTION)]
    pub keep_fraction: f64,
    /// Project the output onto the zone once more
    #[arg(long)]
    pub final_projection: bool,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rms_target: Option<f64>,
    /// Energy fraction for the smallest centered elliptic DFT zone
    #[arg(long)]
    pub energy: Option<f64>,
    /// Aspect ratio of the energy zone
    #[arg(long, default_value_t = 1.0)]
    pub aspect: f64,
    /// Skip the radial window applied before the DFT in energy mode
    #[arg(long)]
    pub no_apodize: bool,
    /// PGM map of the kept coefficients
    #[arg(long)]
    pub sparse_map: Option<PathBuf>,
    /// CSV list of the kept coefficients
    #[arg(long)]
    pub sparse_csv: Option<PathBuf>,
    /// PGM of the fitted energy zone
    #[arg(long)]
    pub zone_mask: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitzoneArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Image whose dimensions (and spectrum, with --rms-target) are used
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub rms_target: Option<f64>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Zone fraction the sample count is derived from
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Exact sample count
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
    #[arg(long, default_value = "jitter")]
    pub grid: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub add_noise: Option<f64>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// Spectral mask PGM; otherwise the zone is built from the shape flags
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// RMS target for the sparsity reference (and the zone, without --fraction)
    #[arg(long)]
    pub rms_target: Option<f64>,
    #[arg(long, default_value = "jitter")]
    pub grid: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
    #[command(flatten)]
    pub iter: IterArgs,
    /// Gaussian noise sigma added to the image before sampling
    #[arg(long)]
    pub add_noise: Option<f64>,
    /// Directory for samples.csv, mask.pgm, recon.pgm, error.pgm, trace.csv
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Trace CSV path (overrides the one in --out-dir)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// One-row summary CSV
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args)]
pub struct InpaintArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// PGM with 255 on observed and 0 on occluded pixels
    #[arg(long)]
    pub occlusion: PathBuf,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct SpecreconArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Image support radius as a fraction of the shorter side
    #[arg(long, default_value_t = 0.35)]
    pub support: f64,
    /// Spectral bound radius as a fraction of half the shorter side
    #[arg(long, default_value_t = 1.0)]
    pub bound: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub stop_delta: f64,
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct PhaserecArgs {
    /// Image whose Fourier modulus is measured (after occlusion)
    #[arg(long)]
    pub input: PathBuf,
    /// Occlusion PGM; otherwise random opaque squares are generated
    #[arg(long)]
    pub occlusion: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub squares: usize,
    #[arg(long, default_value_t = 3)]
    pub square_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub iters1: usize,
    #[arg(long)]
    pub nonnegative: bool,
    #[arg(long)]
    pub stage1_only: bool,
    #[arg(long)]
    pub stage1_output: Option<PathBuf>,
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct CsboundArgs {
    #[arg(long)]
    pub sparsity: Option<f64>,
    /// Sweep from this sparsity (log-spaced)
    #[arg(long, requires = "sweep_to")]
    pub sweep_from: Option<f64>,
    #[arg(long, requires = "sweep_from")]
    pub sweep_to: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Write the sweep CSV here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = output::Outputs::default();
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(&a, &mut out),
        Command::Fitzone(a) => commands::fitzone(&a, &mut out),
        Command::Sample(a) => commands::sample(&a, &mut out),
        Command::Reconstruct(a) => commands::reconstruct(&a, &mut out),
        Command::Pipeline(a) => commands::pipeline(&a, &mut out),
        Command::Inpaint(a) => commands::inpaint(&a, &mut out),
        Command::Specrecon(a) => commands::specrecon(&a, &mut out),
        Command::Phaserec(a) => commands::phaserec(&a, &mut out),
        Command::Csbound(a) => commands::csbound(&a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.discard();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
