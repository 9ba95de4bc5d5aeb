use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "morseflow",
    version,
    about = "Brouwer degree and local Morse cohomology of proper gradient fields on R^n",
    long_about = "Reads scalar fields from JSON files of the form \
        {\"dim\": n, \"expr\": \"x1^2 + x2^2\", \"label\": \"f\"} and analyzes their gradient flows.\n\n\
        Exit codes: 0 success, 1 input/output error, 2 degenerate critical point, \
        3 no isolating radius (field not proper), 4 isolation violated, 5 boundary square nonzero, \
        6 other numerical failure (unresolved orbit, non-transverse data)."
)]
pub struct Cli {
    #[command(flatten)]
    pub tuning: Tuning,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Isolating ball, then the critical points of f inside it with their indices.
    CriticalPoints { field: PathBuf },
    /// Isolating ball (r1, r2, R) and its validation by flow probes.
    Radius { field: PathBuf },
    /// Full pipeline: critical points, Morse complex over Z/2, Betti numbers, degree.
    Morse { field: PathBuf },
    /// Degree and Morse cohomology of two fields, with the homotopy verdict.
    Compare { a: PathBuf, b: PathBuf },
    /// Integrates one gradient-flow trajectory and emits it as CSV.
    Trace {
        field: PathBuf,
        /// Start point, comma separated (e.g. 1,0).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        /// +1 follows ∇f, -1 follows -∇f.
        #[arg(long, default_value_t = -1, allow_hyphen_values = true, value_parser = parse_sign)]
        sign: i8,
        /// Time horizon.
        #[arg(long, default_value_t = 200.0, value_parser = positive)]
        horizon: f64,
    },
    /// Properness screen: minimum |∇f| on spheres of radius 1, 2, 4, ..., 1024.
    Screen { field: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct Tuning {
    /// Newton convergence tolerance on |∇f|.
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive)]
    pub tol_newton: f64,
    /// Smallest admissible |eigenvalue| of the Hessian at a critical point.
    #[arg(long, global = true, default_value_t = 1e-8, value_parser = positive)]
    pub tol_degeneracy: f64,
    /// Local error tolerance of the adaptive flow integrator.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    pub tol_step: f64,
    /// Capture radius around critical points when classifying flow limits.
    #[arg(long, global = true, default_value_t = 1e-4, value_parser = positive)]
    pub capture: f64,
    /// Shots per circle when counting connecting orbits.
    #[arg(long, global = true, default_value_t = 64, value_parser = clap::value_parser!(u32).range(3..))]
    pub resolution: u32,
    /// Newton seed grid points per axis.
    #[arg(long, global = true, default_value_t = 9, value_parser = clap::value_parser!(u32).range(2..))]
    pub grid_density: u32,
    /// Random directions per sampled sphere [default: 64·dim²].
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub sphere_samples: Option<u32>,
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Skip the properness screen before the radius search.
    #[arg(long, global = true)]
    pub assume_proper: bool,
    /// Directory for report files (JSON plus text, or CSV for trace).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of the report printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn parse_sign(s: &str) -> Result<i8, String> {
    match s {
        "1" | "+1" => Ok(1),
        "-1" => Ok(-1),
        _ => Err(format!("sign must be +1 or -1, got {s}")),
    }
}
