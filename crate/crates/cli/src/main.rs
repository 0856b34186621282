//! `maxblaschke` command-line front end.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 solver or numerical error,
//! 3 malformed or invalid input.

mod json;
mod jobs;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Critpoints,
    Metric,
    Curvature,
    PdeOracle,
    VerifyExtremal,
    VerifyBoundary,
    Compose,
    Union,
    Converge,
    Transplant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Polar { n_r: usize, n_theta: usize, r_max: f64 },
    Pde { n: usize, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tolerances {
    pub newton_tol: Option<f64>,
    pub roundtrip_tol: Option<f64>,
}

/// Contents of a `--config` job file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Option<Command>,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
}

#[derive(Debug, Parser)]
#[command(name = "maxblaschke", version, about = "Maximal Blaschke products with prescribed critical points")]
struct Cli {
    /// Pipeline to run (may also come from the config file)
    command: Option<Command>,
    /// JSON input file
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report file (JSON, or CSV for grid exports); stdout when absent
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON job file; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `n_r,n_theta,r_max` for polar grids or `n,r` for PDE grids
    #[arg(long)]
    grid: Option<String>,
    /// `newton_tol` or `newton_tol,roundtrip_tol`
    #[arg(long)]
    tol: Option<String>,
}

pub enum Failure {
    Verification(String),
    Numerical(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Numerical(m) | Failure::Input(m) => m,
        }
    }
}

fn parse_grid(s: &str) -> Result<GridConfig, Failure> {
    let bad = || Failure::Input(format!("--grid expects n_r,n_theta,r_max or n,r, got {s:?}"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => Ok(GridConfig::Polar {
            n_r: a.parse().map_err(|_| bad())?,
            n_theta: b.parse().map_err(|_| bad())?,
            r_max: c.parse().map_err(|_| bad())?,
        }),
        [a, b] => Ok(GridConfig::Pde { n: a.parse().map_err(|_| bad())?, r: b.parse().map_err(|_| bad())? }),
        _ => Err(bad()),
    }
}

fn parse_tol(s: &str, into: &mut Tolerances) -> Result<(), Failure> {
    let bad = || Failure::Input(format!("--tol expects newton_tol[,roundtrip_tol], got {s:?}"));
    let mut it = s.split(',').map(str::trim);
    into.newton_tol = Some(it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?);
    if let Some(r) = it.next() {
        into.roundtrip_tol = Some(r.parse().map_err(|_| bad())?);
    }
    if it.next().is_some() {
        return Err(bad());
    }
    Ok(())
}

fn job(cli: Cli) -> Result<JobConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            jobs::parse_json::<JobConfig>(&text, &p.display().to_string())?
        }
        None => JobConfig::default(),
    };
    if cli.command.is_some() {
        cfg.command = cli.command;
    }
    if cli.input.is_some() {
        cfg.input_path = cli.input;
    }
    if cli.output.is_some() {
        cfg.output_path = cli.output;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(g) = &cli.grid {
        cfg.grid = Some(parse_grid(g)?);
    }
    if let Some(t) = &cli.tol {
        parse_tol(t, &mut cfg.tolerances)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match job(cli).and_then(|cfg| jobs::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("maxblaschke: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
