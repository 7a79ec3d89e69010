//! `tomo` — batch runner for transmission-imaging experiments.
//!
//! Verbs compose into pipelines over RM2 matrices (with geometry sidecars),
//! PGM previews, and CSV tables: `project` makes sinograms, `noise` corrupts
//! them, `denoise` restores them, `recon` back-projects them, `metrics`
//! scores them, `theory` runs the geometry verification suites, and `bench`
//! chains the whole denoising study in one deterministic run.
//!
//! Exit codes: 0 success; 2 a solver stopped without meeting its convergence
//! criterion (artifacts still written); 1 error.

mod artifacts;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigMap;

#[derive(Parser)]
#[command(
    name = "tomo",
    version,
    about = "Transmission-imaging experiment runner",
    propagate_version = true
)]
struct Cli {
    /// Key=value config file with [section] headers; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Project the ellipse phantom into a parallel or fan sinogram.
    Project(run::ProjectArgs),
    /// Apply deterministic Poisson noise to a sinogram.
    Noise(run::NoiseArgs),
    /// Denoise a projection image with a variational model.
    Denoise(run::DenoiseArgs),
    /// Filtered back-projection reconstruction (fan data is rebinned first).
    Recon(run::ReconArgs),
    /// Score an image against a reference: SNR and Frobenius error.
    Metrics(run::MetricsArgs),
    /// Run a theory-verification suite (fractions or continuity).
    Theory(run::TheoryArgs),
    /// Full projection -> noise -> denoise -> reconstruction benchmark.
    Bench(run::BenchArgs),
}

fn main() -> ExitCode {
    // Map argument errors to exit code 1: clap's default of 2 is reserved
    // here for solver non-convergence. Help and version stay successful.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match &cli.config {
        Some(path) => match ConfigMap::load(path) {
            Ok(map) => map,
            Err(err) => {
                eprintln!("error: {err:#}");
                return ExitCode::from(1);
            }
        },
        None => ConfigMap::default(),
    };
    let outcome = match cli.verb {
        Verb::Project(args) => run::project(args, cfg),
        Verb::Noise(args) => run::noise(args, cfg),
        Verb::Denoise(args) => run::denoise(args, cfg),
        Verb::Recon(args) => run::recon(args, cfg),
        Verb::Metrics(args) => run::metrics(args, cfg),
        Verb::Theory(args) => run::theory(args, cfg),
        Verb::Bench(args) => run::bench(args, cfg),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
