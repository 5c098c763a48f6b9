//! `lucid`: dream generation, mask propagation, evaluation, tuning and flow
//! inspection from the command line.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 when
//! input data cannot be read or processed.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "lucid",
    version,
    about = "Lucid dream synthesis and non-learned video object segmentation tools"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize training pairs from one annotated frame.
    Generate(GenerateArgs),
    /// Warp the first annotation through a sequence along backward flows.
    Propagate(PropagateArgs),
    /// Score predicted masks against ground truth.
    Evaluate(EvaluateArgs),
    /// Grid-search refinement parameters on generated pairs.
    Tune(TuneArgs),
    /// Print the size and statistics of a .flo file.
    InspectFlo(InspectFloArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Dataset root with JPEGImages/ and Annotations/.
    #[arg(long, requires = "sequence", conflicts_with_all = ["image", "mask"])]
    pub root: Option<PathBuf>,
    /// Sequence under --root; its first frame and annotation are used.
    #[arg(long, requires = "root")]
    pub sequence: Option<String>,
    /// Source frame, as an alternative to --root/--sequence.
    #[arg(long, requires = "mask")]
    pub image: Option<PathBuf>,
    /// Indexed-palette annotation of --image.
    #[arg(long, requires = "image")]
    pub mask: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of pairs [default: 2500].
    #[arg(long)]
    pub count: Option<usize>,
    /// Base seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Dataset root with JPEGImages/ and Annotations/.
    #[arg(long)]
    pub root: PathBuf,
    /// Sequences to process [default: every sequence under --root].
    #[arg(long = "sequence")]
    pub sequences: Vec<String>,
    /// Flow root holding <sequence>/<frame>.flo, the flow from each frame
    /// back to its predecessor.
    #[arg(long)]
    pub flows: PathBuf,
    /// Output root; masks go to <out>/<sequence>/<frame>.png.
    #[arg(long)]
    pub out: PathBuf,
    /// Drop components of the previous mask with no overlap two frames back.
    #[arg(long)]
    pub temporal_coherency: bool,
    /// Tuned refinement parameters written by `lucid tune`.
    #[arg(long, value_name = "FILE")]
    pub refine_params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted masks, <pred>/<sequence>/<frame>.png.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth masks with the same layout.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory for report.json, report.txt and report.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Boundary tolerance in pixels [default: 0.8% of the image diagonal].
    #[arg(long)]
    pub tolerance: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Manifest file or the dataset directory containing it.
    #[arg(long)]
    pub manifest: PathBuf,
    /// TOML grid specification.
    #[arg(long, value_name = "FILE")]
    pub grid: PathBuf,
    /// Output directory for tuned.json and scores.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Samples per video.
    #[arg(long, default_value_t = lucid_dream::tuner::DEFAULT_PER_VIDEO)]
    pub per_video: usize,
    /// Seed for sample selection and mask degradation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Derive coarse masks by eroding the ground truth with this radius
    /// instead of the random shift plus erosion or dilation.
    #[arg(long, value_name = "RADIUS")]
    pub coarse_erosion: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InspectFloArgs {
    pub file: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Generate(args) => commands::generate(&args, cli.jobs),
        Command::Propagate(args) => commands::propagate(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Tune(args) => commands::tune(&args),
        Command::InspectFlo(args) => commands::inspect_flo(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
