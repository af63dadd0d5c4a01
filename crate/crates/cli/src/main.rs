//! `simseg`: boundary correction, unsupervised detection, smoothing, voting
//! and evaluation over feature and label files.

mod commands;
mod labels;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simseg::config::{DEFAULT_B_SEG, DEFAULT_B_WIN};
use simseg::io::Orientation;
use simseg::{DtwUnit, Setting};

#[derive(Parser, Debug)]
#[command(
    name = "simseg",
    version,
    about = "Similarity-driven temporal action segmentation"
)]
struct Cli {
    /// Seed for every randomised step (k-means, projections, synthetic data).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for batch runs; 0 uses all cores.
    #[arg(long, short = 'j', global = true, default_value_t = 0)]
    jobs: usize,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find boundaries in feature files without any prediction.
    Detect(DetectArgs),
    /// Move the boundaries of a frame-wise prediction onto feature changes.
    Correct(CorrectArgs),
    /// Sliding-window smoothing of a frame-wise prediction.
    Smooth(SmoothArgs),
    /// Frame-wise majority vote over several predictions of one video.
    Vote(VoteArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Write a synthetic dataset with known boundaries.
    Synth(SynthArgs),
    /// Draw label sequences as coloured rows (SVG or terminal).
    Plot(PlotArgs),
}

/// Where batch inputs come from.
#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    /// Dataset root holding features/, groundTruth/, mapping.txt and splits/.
    #[arg(long, env = "SIMSEG_DATA")]
    pub data: Option<PathBuf>,

    /// key=value manifest naming the dataset directories; overrides --data.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    /// Split bundle listing the videos of a batch run.
    #[arg(long)]
    pub split: Option<PathBuf>,

    /// Output directory for batch runs, one file per video.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Feature file (NPY). Omit for a batch run over --split.
    #[arg(long, short)]
    pub features: Option<PathBuf>,

    #[arg(long, short = 'k')]
    pub num_classes: usize,

    /// Minimum gap between boundaries, or `auto`.
    #[arg(long, default_value = "auto")]
    pub b_intrv: Setting,

    /// DTW comparison: `scalar`, `mean` or `window:K`.
    #[arg(long, default_value = "window:4")]
    pub dtw_unit: DtwUnit,

    /// Project features to this many dimensions first.
    #[arg(long)]
    pub dim_reduce: Option<usize>,

    #[arg(long, default_value_t = 1)]
    pub kmeans_restarts: usize,

    #[arg(long, default_value = "auto", value_parser = parse_orientation)]
    pub orientation: Orientation,

    /// Boundary list output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Also write per-frame segment ids (majority cluster per segment).
    #[arg(long)]
    pub labels_out: Option<PathBuf>,

    #[command(flatten)]
    pub dataset: DatasetArgs,
}

#[derive(Args, Debug)]
pub struct CorrectArgs {
    #[arg(long, short)]
    pub features: Option<PathBuf>,

    /// Frame-wise prediction to correct.
    #[arg(long, short)]
    pub pred: Option<PathBuf>,

    /// Prediction directory for batch runs.
    #[arg(long)]
    pub pred_dir: Option<PathBuf>,

    /// Class mapping; without it labels are integer ids.
    #[arg(long)]
    pub mapping: Option<PathBuf>,

    #[arg(long, default_value_t = Setting::Fixed(DEFAULT_B_WIN))]
    pub b_win: Setting,

    #[arg(long, default_value_t = Setting::Fixed(DEFAULT_B_SEG))]
    pub b_seg: Setting,

    #[arg(long, default_value = "auto", value_parser = parse_orientation)]
    pub orientation: Orientation,

    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Per-boundary report: `original corrected iterations` per line.
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[command(flatten)]
    pub dataset: DatasetArgs,
}

#[derive(Args, Debug)]
pub struct SmoothArgs {
    #[arg(long, short)]
    pub pred: Option<PathBuf>,

    #[arg(long)]
    pub pred_dir: Option<PathBuf>,

    #[arg(long)]
    pub mapping: Option<PathBuf>,

    /// Window size in frames, or `auto`.
    #[arg(long, default_value = "16")]
    pub s_win: Setting,

    /// Frames per step; defaults to the window size.
    #[arg(long)]
    pub stride: Option<usize>,

    #[arg(long, short)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub dataset: DatasetArgs,
}

#[derive(Args, Debug)]
pub struct VoteArgs {
    /// Two or more predictions of the same video.
    #[arg(required = true, num_args = 2..)]
    pub preds: Vec<PathBuf>,

    /// Index of the prediction that wins when every file disagrees; defaults to the last.
    #[arg(long)]
    pub trusted: Option<usize>,

    #[arg(long)]
    pub mapping: Option<PathBuf>,

    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Single prediction file (with --gt).
    #[arg(long, short)]
    pub pred: Option<PathBuf>,

    #[arg(long, short)]
    pub gt: Option<PathBuf>,

    /// Prediction directory, one `<video>.txt` per video.
    #[arg(long)]
    pub pred_dir: Option<PathBuf>,

    #[arg(long)]
    pub gt_dir: Option<PathBuf>,

    #[arg(long)]
    pub mapping: Option<PathBuf>,

    /// Comma-separated split bundles; each gets a row and the rows are averaged.
    #[arg(long, value_delimiter = ',')]
    pub splits: Vec<PathBuf>,

    #[arg(long, default_value_t = simseg::metrics::DEFAULT_BOUNDARY_TOLERANCE)]
    pub boundary_tolerance: usize,

    /// Class names left out of edit, F1 and boundary scores (e.g. SIL).
    #[arg(long, value_delimiter = ',')]
    pub ignore: Vec<String>,

    /// Map prediction ids to classes first: `none`, `hungarian` or `greedy`.
    /// With a mapping, predictions are then read as integer ids.
    #[arg(long = "match", default_value = "none")]
    pub matching: commands::IdMatching,

    /// Segment matching for F1: `maximum` or `greedy`.
    #[arg(long, default_value = "maximum")]
    pub f1_matching: commands::F1Matching,

    /// Print `key=value` lines instead of a table.
    #[arg(long)]
    pub kv: bool,

    /// Also write the `key=value` report here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub dataset: DatasetArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, short)]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 4)]
    pub videos: usize,

    #[arg(long, default_value_t = 5)]
    pub segments: usize,

    #[arg(long, default_value_t = 60)]
    pub min_len: usize,

    #[arg(long, default_value_t = 120)]
    pub max_len: usize,

    #[arg(long, default_value_t = 64)]
    pub dim: usize,

    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,

    /// Minimum distance between segment means.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,

    /// Also write predictions/ with every boundary shifted by up to this many frames.
    #[arg(long)]
    pub pred_shift: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Label files, one row each, top to bottom.
    #[arg(required = true)]
    pub labels: Vec<PathBuf>,

    #[arg(long)]
    pub mapping: Option<PathBuf>,

    /// Row titles; defaults to the file stems.
    #[arg(long, value_delimiter = ',')]
    pub titles: Vec<String>,

    /// Print coloured block rows to the terminal instead of writing SVG.
    #[arg(long)]
    pub text: bool,

    /// Columns for --text.
    #[arg(long, default_value_t = 80)]
    pub width: usize,

    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    s.parse().map_err(|e: simseg::Error| e.to_string())
}

/// A run that finished but hit a degenerate case worth a distinct exit code.
pub enum Outcome {
    Done,
    Degenerate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
    {
        log::warn!("thread pool: {e}");
    }
    let result = match cli.command {
        Command::Detect(a) => commands::detect(&a, cli.seed),
        Command::Correct(a) => commands::correct(&a, cli.seed),
        Command::Smooth(a) => commands::smooth(&a),
        Command::Vote(a) => commands::vote(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Synth(a) => commands::synth(&a, cli.seed),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", chain(&e));
            ExitCode::from(2)
        }
    }
}

/// Error chain joined by `: `, skipping causes the previous message already quotes.
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !prev.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        prev = msg;
    }
    out
}
