//! `inls` command-line frontend.
//!
//! Every command prints one JSON document on stdout. Failures print a single-line
//! JSON diagnostic on stderr and exit with 2 (invalid input) or 3 (solver failure).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "inls", version, about = "Weighted nonlinear eigenvalue workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    #[arg(long = "N")]
    pub n: u32,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub p: f64,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long = "s-min", default_value_t = 1e-4)]
    pub s_min: f64,
    #[arg(long = "s-max", default_value_t = 1e4)]
    pub s_max: f64,
    #[arg(long = "M", default_value_t = 1025)]
    pub m: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OptArgs {
    #[arg(long = "max-iters", default_value_t = 50_000)]
    pub max_iters: usize,
    #[arg(long = "grad-tol", default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long = "step-init", default_value_t = 1.0)]
    pub step_init: f64,
    #[arg(long = "armijo-c", default_value_t = 1e-4)]
    pub armijo_c: f64,
    #[arg(long = "armijo-shrink", default_value_t = 0.5)]
    pub armijo_shrink: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Gaussian,
    Bump,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Admissibility and regime of a weighted pair (eta, r)
    #[command(allow_negative_numbers = true)]
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        radial: bool,
    },
    /// CSV atlas of verdicts over a uniform (eta, r) grid
    #[command(allow_negative_numbers = true)]
    RegionMap {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "eta-min", default_value_t = 0.0)]
        eta_min: f64,
        #[arg(long = "eta-max", default_value_t = 2.0)]
        eta_max: f64,
        #[arg(long = "eta-n", default_value_t = 41)]
        eta_n: usize,
        #[arg(long = "r-min", default_value_t = 1.0)]
        r_min: f64,
        #[arg(long = "r-max", default_value_t = 8.0)]
        r_max: f64,
        #[arg(long = "r-n", default_value_t = 71)]
        r_n: usize,
        #[arg(long)]
        radial: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First eigenvalue by Rayleigh-quotient descent
    #[command(allow_negative_numbers = true)]
    Eigen {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        opts: OptArgs,
        #[arg(long, value_enum, default_value_t = InitKind::Gaussian)]
        init: InitKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Negative-energy minimizer of a coercive energy
    #[command(allow_negative_numbers = true)]
    Minimize {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        opts: OptArgs,
        /// Power term `c:eta:r`; repeatable
        #[arg(long = "term", allow_hyphen_values = true)]
        terms: Vec<String>,
        /// Shorthand for a single unit-coefficient term with --r
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "lambda", default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute energies and residuals of a stored profile
    #[command(allow_negative_numbers = true)]
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long = "term", allow_hyphen_values = true)]
        terms: Vec<String>,
        #[arg(long = "lambda", default_value_t = 0.0)]
        lambda: f64,
    },
    /// Compactness levels and truncation roots
    #[command(allow_negative_numbers = true)]
    Thresholds {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        eta1: f64,
        /// Embedding constant for c*; defaults to --S1
        #[arg(long = "S")]
        s: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long = "S1", default_value_t = 1.0)]
        s1: f64,
        #[arg(long = "S2", default_value_t = 1.0)]
        s2: f64,
        #[arg(long, default_value_t = 0.0)]
        eta2: f64,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long = "C1")]
        c1: Option<f64>,
    },
    /// Upper bound for the best weighted Sobolev constant
    #[command(allow_negative_numbers = true)]
    Probe {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        eta: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        opts: OptArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", commands::diagnostic("USAGE", first));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command) {
        Ok(stdout) => {
            println!("{}", stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", commands::diagnostic(e.code(), &e.to_string()));
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
