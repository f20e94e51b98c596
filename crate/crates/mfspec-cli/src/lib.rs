//! `mfspec` command-line tool: analysis of signals and images, synthesis of
//! reference processes, and Monte Carlo runs from TOML files.
//!
//! Exit codes: 0 on success, 1 for usage or parameter errors, 2 for missing
//! or malformed data.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod io;
pub mod ranges;

use config::{AnalysisSection, Values};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<mfspec::Error> for CliError {
    fn from(e: mfspec::Error) -> Self {
        use mfspec::Error::*;
        match e {
            UnsupportedFilter(_) | InvalidParameter { .. } | InvalidRange(_) => CliError::Usage(e.to_string()),
            InsufficientLength { .. } | InvalidInput(_) | Embedding(_) => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mfspec", version, about = "Multifractal spectrum estimation")]
pub struct Cli {
    /// Worker threads (default: MFSPEC_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the classical and envelope spectra of one signal or image.
    Analyze(AnalyzeArgs),
    /// Generate a reference process and its theoretical spectrum.
    Synth(SynthArgs),
    /// Monte Carlo experiment described by a TOML file.
    Mc(McArgs),
}

/// Analysis options shared by `analyze` and `mc`; they override `[analysis]`.
#[derive(Debug, Clone, Default, Args)]
pub struct AnalysisFlags {
    /// Vanishing moments of the Daubechies wavelet.
    #[arg(long)]
    pub nvm: Option<usize>,
    /// Decomposition depth.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Regression range `[j1, j2]`; larger `j` is finer.
    #[arg(long)]
    pub j1: Option<i32>,
    #[arg(long)]
    pub j2: Option<i32>,
    #[arg(long)]
    pub centering_j1: Option<i32>,
    #[arg(long)]
    pub centering_j2: Option<i32>,
    /// Moment orders, e.g. `-4:0.25:4` or `-2,0,2`.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Lifting strengths; must include 0.
    #[arg(long)]
    pub gamma: Option<String>,
    /// `auto` or explicit shifts.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long)]
    pub delta_half_width: Option<f64>,
    #[arg(long)]
    pub delta_count: Option<usize>,
    /// `parabola` or `abs`.
    #[arg(long)]
    pub g_shape: Option<String>,
    /// Hoelder exponents at which spectra are reported.
    #[arg(long = "h", allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Variance-weighted regressions.
    #[arg(long)]
    pub weighted: bool,
    /// Drop border-affected coefficients.
    #[arg(long)]
    pub mask_border: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub logscale_q: Option<String>,
    #[arg(long)]
    pub logscale_gamma: Option<String>,
}

impl AnalysisFlags {
    pub fn section(&self) -> AnalysisSection {
        let text = |s: &Option<String>| s.clone().map(Values::Text);
        AnalysisSection {
            nvm: self.nvm,
            levels: self.levels,
            j1: self.j1,
            j2: self.j2,
            centering_j1: self.centering_j1,
            centering_j2: self.centering_j2,
            q: text(&self.q),
            gamma: text(&self.gamma),
            delta: text(&self.delta),
            delta_half_width: self.delta_half_width,
            delta_count: self.delta_count,
            g_shape: self.g_shape.clone(),
            h: text(&self.h),
            weighted: self.weighted.then_some(true),
            mask_border: self.mask_border.then_some(true),
            logscale_q: text(&self.logscale_q),
            logscale_gamma: text(&self.logscale_gamma),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// csv, pgm, f64 or coeffs; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Expected dimension (1 or 2).
    #[arg(long)]
    pub dim: Option<usize>,
    /// ROWSxCOLS for raw f64 input; read from a neighbouring manifest.json otherwise.
    #[arg(long)]
    pub shape: Option<String>,
    /// TOML file whose [analysis] section provides defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "mfspec-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// levy, dwc, dwc-thresholded, mrw1d, mrw2d, concat-mrw1d or concat-mrw2d.
    #[arg(long)]
    pub process: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Self-similarity parameter; a list gives one concatenated piece per value.
    #[arg(long = "H")]
    pub hurst: Option<String>,
    #[arg(long)]
    pub lambda2: Option<String>,
    #[arg(long)]
    pub axis: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid on which the theoretical spectrum is sampled.
    #[arg(long = "h", default_value = "0:0.005:1.5")]
    pub h: String,
    /// Sample format: csv or f64 for signals, f64 or pgm for images.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, default_value = "mfspec-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "mfspec-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub n_mc: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub analysis: AnalysisFlags,
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("MFSPEC_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::usage(format!("MFSPEC_THREADS=`{v}` is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::usage("thread count must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

/// Runs the tool and returns its exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = init_threads(cli.threads).and_then(|()| match &cli.command {
        Command::Analyze(a) => commands::analyze(a, &argv),
        Command::Synth(a) => commands::synth(a, &argv),
        Command::Mc(a) => commands::mc(a, &argv),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mfspec: {e}");
            e.exit_code()
        }
    }
}
