mod commands;
mod run_manifest;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isoscope::IsoError;
use isoscope_corpus::CorpusError;

use crate::commands::{
    CompareArgs, DeltaArgs, FilterArgs, IsoscoreArgs, LayerwiseArgs, PoolArgs, SpectrumArgs,
    SynthArgs,
};

/// Isotropy analysis of hidden-state point clouds.
#[derive(Debug, Parser)]
#[command(name = "isoscope", version)]
struct Cli {
    /// Worker threads for per-group scoring (defaults to all cores).
    #[arg(long, global = true, env = "ISOSCOPE_WORKERS")]
    workers: Option<usize>,

    /// Where to write the run manifest. Defaults to run_manifest.json in
    /// the output directory, or standard error when there is none.
    #[arg(long, global = true)]
    run_manifest: Option<PathBuf>,

    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// IsoScore of one point cloud (ISOB-M or CSV).
    Isoscore(IsoscoreArgs),
    /// Singular value spectra of clouds or manifest streams.
    Spectrum(SpectrumArgs),
    /// Multilingual vs bilingual IsoScores on the same sentences.
    Compare(CompareArgs),
    /// Per-language minus union IsoScore.
    Delta(DeltaArgs),
    /// Per-language and union IsoScore at each layer.
    Layerwise(LayerwiseArgs),
    /// Mean-pool an ISOB-R record stream into an ISOB-M cloud.
    Pool(PoolArgs),
    /// Rule-based cleaning of a line-aligned bitext.
    FilterCorpus(FilterArgs),
    /// Write a synthetic Gaussian cloud.
    Synth(SynthArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<IsoError>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.is::<io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size worker pool: {e}");
        }
    }

    let ctx = run_manifest::Context::new(cli.run_manifest.clone(), cli.workers);
    let result = match &cli.command {
        Command::Isoscore(a) => commands::isoscore(a, ctx),
        Command::Spectrum(a) => commands::spectrum(a, ctx),
        Command::Compare(a) => commands::compare(a, ctx),
        Command::Delta(a) => commands::delta(a, ctx),
        Command::Layerwise(a) => commands::layerwise(a, ctx),
        Command::Pool(a) => commands::pool(a, ctx),
        Command::FilterCorpus(a) => commands::filter_corpus(a, ctx),
        Command::Synth(a) => commands::synth(a, ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
