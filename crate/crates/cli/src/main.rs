//! `drumgen`: corpus preprocessing, the three training stages, prompt-driven
//! generation, and the distance-based evaluation report.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "drumgen",
    version,
    about = "Text-conditioned latent diffusion for symbolic drumbeats"
)]
pub(crate) struct Cli {
    /// JSON run configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Overrides the command's output path from the config.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Text prompt for generation (empty means unconditional).
    #[arg(long, global = true)]
    pub prompt: Option<String>,

    /// Count: samples per prompt (generate) or corpus size (synth-corpus).
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Text encoder variant.
    #[arg(long, global = true, value_enum)]
    pub encoder: Option<config::EncoderKind>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub(crate) enum Command {
    /// Scan a MIDI tree into the pianoroll corpus and keyword vocabulary.
    Preprocess,
    /// Emit a deterministic synthetic MIDI corpus.
    SynthCorpus,
    /// Train the pianoroll autoencoder.
    TrainAe,
    /// Pretrain the contrastive text encoder.
    TrainClip,
    /// Train the latent diffusion model.
    TrainLdm,
    /// Sample drumbeats for a text prompt.
    Generate,
    /// Compute the distance report over dataset and generated sets.
    Evaluate,
}

/// 0 success, 1 usage/config, 2 data error, 3 missing dependency.
fn exit_code(err: &drumgen_core::Error) -> u8 {
    use drumgen_core::Error;
    match err {
        Error::Dependency(_) => 3,
        Error::Config(_) | Error::Json(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version surface here with a zero exit code
            let code = u8::from(e.exit_code() != 0);
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
