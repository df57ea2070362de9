mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Beat-synchronized robot choreography: features, capture, training, generation.
#[derive(Debug, Parser)]
#[command(name = "beatmotion", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track beats in a WAV clip and measure every inter-beat segment.
    Features {
        audio: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Retarget a skeleton capture and sample one robot pose per beat.
    Capture {
        skeleton: PathBuf,
        /// features.json of the music the capture was danced to.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        limits: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Turn beat-sampled poses into a movement dataset.
    Dataset {
        poses: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train the movement VAE, writing checkpoints and a loss log.
    Train(TrainArgs),
    /// Generate a choreography for a clip from a trained model.
    Generate {
        #[arg(long)]
        model: PathBuf,
        audio: PathBuf,
        #[arg(long)]
        limits: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Joint-variance report of the choreographies each checkpoint generates for a clip.
    Eval {
        audio: PathBuf,
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        limits: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write a synthetic click-track clip and a matching skeleton capture.
    Synth {
        #[arg(long, default_value_t = 120.0)]
        bpm: f64,
        #[arg(long, default_value_t = 30.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output WAV path.
        #[arg(long)]
        audio: PathBuf,
        /// Output skeleton JSONL path.
        #[arg(long)]
        capture: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    dataset: PathBuf,
    /// Final model path; checkpoints and the loss log go next to it.
    #[arg(short, long)]
    out: PathBuf,
    /// Epochs to run in this invocation.
    #[arg(long, default_value_t = 25)]
    epochs: u32,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    checkpoint_every: u32,
    /// Fraction of pairs (leading, in time order) used for training; the rest is held out.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Use N(loudness mean, variance mean) of this features.json as the latent prior.
    #[arg(long)]
    prior_from: Option<PathBuf>,
    /// Continue from a checkpoint, restoring optimizer state.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Loss log path (default: `<out stem>.loss.csv`).
    #[arg(long)]
    loss_log: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Features { audio, out } => commands::features(&audio, &out),
        Command::Capture {
            skeleton,
            features,
            limits,
            out,
        } => commands::capture(&skeleton, &features, limits.as_deref(), &out),
        Command::Dataset { poses, out } => commands::dataset(&poses, &out),
        Command::Train(args) => commands::train(&args),
        Command::Generate {
            model,
            audio,
            limits,
            out,
        } => commands::generate(&model, &audio, limits.as_deref(), &out),
        Command::Eval {
            audio,
            checkpoints,
            limits,
            out,
        } => commands::eval(&checkpoints, &audio, limits.as_deref(), &out),
        Command::Synth {
            bpm,
            seconds,
            seed,
            audio,
            capture,
        } => commands::synth(bpm, seconds, seed, &audio, capture.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
