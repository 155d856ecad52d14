mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use output::write_atomic;

#[derive(Parser, Debug)]
#[command(name = "hypspec", version, about = "Length spectra, trace-formula variances and random-cover checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmd {
    /// Enumerate primitive closed geodesics and their powers up to --Lmax.
    Spectrum,
    /// Σ²(μ, L) over [λ, λ+δ] and its average against the ensemble constant.
    Variance,
    /// Averaged Σ² gap over a grid of L values.
    Average,
    /// Simultaneous Dirichlet approximation for the oscillation extremes.
    Dirichlet,
    /// Random permutation covers of a free preset.
    Covers,
    /// Poisson surrogate: exact cumulants and the CLT.
    Poisson,
    /// Energy-averaged deviation from the ensemble constant per surrogate draw.
    Ergodicity,
    /// Periodic-orbit sum rule and cluster sums.
    Sumrule,
    /// Homology winding CLT for the orbit ensemble at length T.
    #[command(name = "orbit-clt")]
    OrbitClt,
    /// GOE to GUE crossover under a scaled flux.
    Transition,
    /// Haar Monte Carlo for the integral of (tr g + conj tr g)².
    Haar,
}

impl Cmd {
    pub fn name(self) -> &'static str {
        match self {
            Cmd::Spectrum => "spectrum",
            Cmd::Variance => "variance",
            Cmd::Average => "average",
            Cmd::Dirichlet => "dirichlet",
            Cmd::Covers => "covers",
            Cmd::Poisson => "poisson",
            Cmd::Ergodicity => "ergodicity",
            Cmd::Sumrule => "sumrule",
            Cmd::OrbitClt => "orbit-clt",
            Cmd::Transition => "transition",
            Cmd::Haar => "haar",
        }
    }
}

/// Every option is global; unset ones take per-command defaults.
#[derive(clap::Args, Debug, Clone, Default, Serialize)]
pub struct Opts {
    /// schottky_pants(l1,l2,l3) | octagon_genus2 | punctured_torus
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Enumeration cutoff; defaults to the largest length the command needs.
    #[arg(long = "Lmax", global = true)]
    #[serde(rename = "Lmax")]
    pub lmax: Option<f64>,
    #[arg(long, global = true, action = clap::ArgAction::Set)]
    pub oriented: Option<bool>,
    /// Spectrum CSV written by `spectrum`, used instead of enumerating.
    #[arg(long = "spectrum-file", global = true)]
    #[serde(rename = "spectrum-file")]
    pub spectrum_file: Option<PathBuf>,
    /// triangle | bump
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// trivial | flux | JSON ({"flux":[..],"alpha":a} | {"matrices":[..]} | {"su2_random":seed})
    #[arg(long, global = true)]
    pub character: Option<String>,
    /// Comma-separated flux vector, one entry per generator.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub flux: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long = "L", global = true)]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[arg(long = "L-grid", global = true, value_delimiter = ',')]
    #[serde(rename = "L-grid")]
    pub l_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long = "Lambda", global = true)]
    #[serde(rename = "Lambda")]
    pub big_lambda: Option<f64>,
    #[arg(long = "Lambda-grid", global = true, value_delimiter = ',')]
    #[serde(rename = "Lambda-grid")]
    pub big_lambda_grid: Option<Vec<f64>>,
    /// Cover degree.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Surrogate draws for the ergodicity part of `poisson`.
    #[arg(long = "erg-draws", global = true)]
    #[serde(rename = "erg-draws")]
    pub erg_draws: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub mmax: Option<usize>,
    #[arg(long = "T", global = true)]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[arg(long = "s-grid", global = true, value_delimiter = ',')]
    #[serde(rename = "s-grid")]
    pub s_grid: Option<Vec<f64>>,
    #[arg(long = "Y", global = true)]
    #[serde(rename = "Y")]
    pub y: Option<f64>,
    #[arg(long = "M", global = true)]
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[arg(long = "lambda-max", global = true)]
    #[serde(rename = "lambda-max")]
    pub lambda_max: Option<f64>,
    /// plus | dual | both
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// batch | divisor
    #[arg(long, global = true)]
    pub centering: Option<String>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Comma-separated class words for `covers`, letters joined by dots (a.B).
    #[arg(long, global = true, value_delimiter = ',')]
    pub words: Option<Vec<String>>,
    /// U1 | SU2 | U<N>
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Quadrature points; defaults resolve the fastest oscillation.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Override the ensemble constant used as target.
    #[arg(long, global = true)]
    pub target: Option<f64>,
    /// Exit with status 3 when any acceptance check fails.
    #[arg(long, global = true)]
    pub check: bool,
    /// json | csv
    #[arg(long, global = true)]
    pub format: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "HYPSPEC_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
}

pub enum Fail {
    Usage(String),
    Runtime(String),
}

impl From<hypspec::Error> for Fail {
    fn from(e: hypspec::Error) -> Self {
        use hypspec::Error as E;
        match e {
            E::InvalidParameters(_)
            | E::SpectrumTooShort { .. }
            | E::UnderResolved { .. }
            | E::VarianceTooSmall { .. }
            | E::NonCompactPreset(_)
            | E::TrivialElement
            | E::NonHyperbolicElement(_) => Fail::Usage(e.to_string()),
            _ => Fail::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.opts.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let out = match commands::run(cli.cmd, cli.opts.clone()) {
        Ok(o) => o,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Fail::Runtime(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    for n in &out.0.notes {
        eprintln!("note: {n}");
    }
    let bytes = match out.1.as_str() {
        "csv" => match out.0.csv() {
            Ok(b) => b,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        _ => out.0.json(),
    };
    if let Err(e) = write_atomic(cli.opts.out.as_deref(), &bytes) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(1);
    }
    for c in out.0.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {} (bound {})", c.name, c.value, c.bound);
    }
    if cli.opts.check && !out.0.pass() {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
