//! Command-line driver: scene synthesis, level-set evolution, recurrent
//! refinement, training, evaluation and a distance-transform debug tool.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status for bad command lines.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures while running a valid command.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "mls", version, about = "Multiphase level-set scene parsing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write seeded synthetic scenes and their label maps.
    Synth(SynthArgs),
    /// Evolve level sets initialized from a score stack.
    Evolve(EvolveArgs),
    /// Run the recurrent predict-and-evolve loop with a trained model.
    Refine(RefineArgs),
    /// Train the coarse predictor with deep supervision.
    Train(TrainArgs),
    /// Compare predicted and ground-truth label maps.
    Eval(EvalArgs),
    /// Euclidean distance transform of a mask, for debugging.
    Edt(EdtArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; scenes go to `images/`, labels to `labels/`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Side length in pixels.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Shapes painted per non-background class.
    #[arg(long, default_value_t = 3)]
    pub shapes: usize,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mirror a random half of the scenes left to right.
    #[arg(long)]
    pub flip: bool,
    /// Leave the last class out of every scene.
    #[arg(long)]
    pub void_class: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Speeds from Gaussian region models of the image.
    Classic,
    /// Speeds from the scores themselves.
    Deep,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Input image (binary PPM).
    #[arg(long)]
    pub image: PathBuf,
    /// Initial per-class scores in [0, 1] (MLS1 stack).
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Deep)]
    pub mode: Mode,
    /// Run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output label map (binary PGM).
    #[arg(long)]
    pub out: PathBuf,
    /// Write `frame_NNNN.pgm` labels and `phi_NNNN.mls` level sets for the
    /// initial state and every iteration.
    #[arg(long)]
    pub dump_frames: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Trained predictor (MLSW file).
    #[arg(long)]
    pub model: PathBuf,
    /// Prediction rounds; defaults to `steps` from the configuration.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output label map (binary PGM).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory with `images/*.ppm` and matching `labels/*.pgm`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output model (MLSW file).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of classes; defaults to one more than the largest label.
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predicted label maps.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth label maps with the same file names.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub classes: usize,
}

#[derive(Debug, Args)]
pub struct EdtArgs {
    /// Binary PGM; nonzero pixels are the sites.
    #[arg(long)]
    pub mask: PathBuf,
    /// Distances to the nearest site as a one-plane MLS1 stack.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. `MLS_THREADS` caps the worker threads.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
