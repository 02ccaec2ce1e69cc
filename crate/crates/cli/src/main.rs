//! `axisym` command-line front end.

mod commands;
mod config;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use axisym::annulus::AnnulusSetup;
use axisym::energy::BoundaryData;
use axisym::fields::Variant;
use axisym::instance::GridSpec;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{parse_grid, Overrides};

pub const EXIT_SINGULAR: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::config(format!("{}: {e}", path.display()))
    }

    pub fn singular(message: impl Into<String>) -> Self {
        CliError { code: EXIT_SINGULAR, message: message.into() }
    }
}

#[derive(Parser)]
#[command(name = "axisym", version, about = "Energy minimization and symmetry certificates on surfaces of revolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run config (JSON, schema "axisym-run/1").
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `outputs`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides solver.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the grid, as n_phi x n_t.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides<'_> {
        Overrides { out: self.out.as_deref(), seed: self.seed, grid: self.grid }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Symmetric,
    Antisymmetric,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the 2D energy and write the best field, its modes and reports.
    Minimize(RunArgs),
    /// Minimize the 1D profile functional for both variants.
    Reduce {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory of an earlier `minimize` run to compare against.
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Run the certificate suite; exits 1 if any applicable certificate fails.
    Verify {
        /// Suite config (JSON, schema "axisym-suite/1"); defaults to the registered matrix.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "certificates")]
        out: PathBuf,
        /// Overrides the seed of every instance.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the grid of every instance, as n_phi x n_t.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<GridSpec>,
    },
    /// Solve the linear annulus example.
    Annulus {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        kappa: f64,
        /// Radial cells; also the angular count unless --grid is given.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Overrides the grid, as n_phi x n_r.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<GridSpec>,
        /// Inner circle data, `variant:x,y,z`.
        #[arg(long, value_parser = commands::parse_boundary, default_value = "symmetric:1,0,0")]
        inner: BoundaryData,
        /// Outer circle data, `variant:x,y,z`.
        #[arg(long, value_parser = commands::parse_boundary, default_value = "symmetric:0,0.6,0.8")]
        outer: BoundaryData,
        #[arg(long, default_value = "annulus-out")]
        out: PathBuf,
    },
    /// Symmetrize a field CSV and certify the energy chain.
    Symmetrize {
        #[command(flatten)]
        run: RunArgs,
        /// Field CSV written for the config's mesh.
        #[arg(long)]
        field: PathBuf,
        /// Defaults to the variant of the anisotropy field.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("AXISYM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("AXISYM_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("AXISYM_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_threads()?;
    match cli.command {
        Command::Minimize(args) => commands::minimize(&args.config, &args.overrides()),
        Command::Reduce { run, prior } => commands::reduce(&run.config, &run.overrides(), prior.as_deref()),
        Command::Verify { config, out, seed, grid } => commands::verify(config.as_deref(), &out, seed, grid),
        Command::Annulus { kappa, n, grid, inner, outer, out } => {
            let (n_phi, n_r) = grid.map_or((n, n), |g| (g.n_phi, g.n_t));
            commands::annulus(AnnulusSetup { n_r, n_phi, kappa, inner, outer }, &out)
        }
        Command::Symmetrize { run, field, variant } => {
            let variant = variant.map(|v| match v {
                VariantArg::Symmetric => Variant::Symmetric,
                VariantArg::Antisymmetric => Variant::Antisymmetric,
            });
            commands::symmetrize(&run.config, &run.overrides(), &field, variant)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
