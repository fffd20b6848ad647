//! `ccsc`: dictionary training, phase restoration and the simulation
//! harnesses from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments or data.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccsc", version, about = "Complex convolutional sparse coding for interferometric phase restoration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a dictionary from a directory of clean CIMG rasters.
    Train(TrainArgs),
    /// Restore a noisy interferogram with a trained dictionary.
    Denoise(DenoiseArgs),
    /// Generate a synthetic scene and its noisy interferogram.
    Simulate(SimulateArgs),
    /// Compare an estimate against the truth.
    Metrics(MetricsArgs),
    /// Monte-Carlo study of filters on a phase step.
    McStep(McStepArgs),
    /// Convert between CIMG and CSV (`row,col,re,im`), by file extension.
    Convert(ConvertArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Directory holding the training rasters (`*.cimg`, equal sizes).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub filters: usize,
    #[arg(long, default_value_t = 8)]
    pub filter_size: usize,
    #[arg(long, default_value_t = ccsc::TrainConfig::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Coding penalty [default: 50·lambda + 1].
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = ccsc::TrainConfig::DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Outer iterations.
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dictionary (CDIC).
    #[arg(long)]
    pub out: PathBuf,
    /// Objective trace [default: <out>.trace.txt].
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct DenoiseArgs {
    /// Noisy interferogram (CIMG).
    #[arg(long)]
    pub input: PathBuf,
    /// Dictionary (CDIC).
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, default_value_t = ccsc::SolverConfig::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Gradient weight; 0 selects plain ComCSC.
    #[arg(long, default_value_t = ccsc::SolverConfig::DEFAULT_MU)]
    pub mu: f64,
    /// ADMM penalty [default: 10·lambda].
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    /// Restored interferogram (CIMG).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional HSV phase render.
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// Optional ADMM trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// One of step, ramp, peaks, shear_plane, squares, mountain_like.
    #[arg(long)]
    pub pattern: String,
    #[arg(long, default_value_t = 256)]
    pub rows: usize,
    #[arg(long, default_value_t = 256)]
    pub cols: usize,
    /// Constant coherence.
    #[arg(long, conflicts_with = "coherence_ramp")]
    pub coherence: Option<f64>,
    /// Coherence ramp over columns, as `LEFT,RIGHT`.
    #[arg(long, value_name = "LEFT,RIGHT")]
    pub coherence_ramp: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives truth.cimg, noisy.cimg and coherence.cimg.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write truth.png and noisy.png.
    #[arg(long)]
    pub png: bool,
}

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
    /// Colinearity window (odd, at least 3).
    #[arg(long, default_value_t = 7)]
    pub window: usize,
    /// Residual phase raster (CIMG, real).
    #[arg(long)]
    pub residual: Option<PathBuf>,
    /// Colinearity raster (CIMG, real; NaN on the border).
    #[arg(long)]
    pub colinearity: Option<PathBuf>,
}

#[derive(Args)]
pub struct McStepArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.3)]
    pub coherence: f64,
    /// Comma-separated: noisy, boxcar, comcsc, comcsc-gr.
    #[arg(long, value_delimiter = ',', default_value = "noisy,boxcar")]
    pub methods: Vec<String>,
    /// Dictionary, required by the comcsc methods.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub rows: usize,
    /// Profile length.
    #[arg(long, default_value_t = 256)]
    pub cols: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = ccsc::SolverConfig::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = ccsc::SolverConfig::DEFAULT_MU)]
    pub mu: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Denoise(a) => commands::denoise(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::McStep(a) => commands::mc_step(&a),
        Command::Convert(a) => commands::convert(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
