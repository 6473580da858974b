//! `denjoy`: grids of Green functions, kernels, m-functions, flows and
//! transfer matrices for finite-gap Denjoy domains, written as CSV.

mod config;
mod modes;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Mode, RunConfig, Tolerances};

#[derive(Parser, Debug)]
#[command(name = "denjoy", version, about = "Spectral computations on finite-gap Denjoy domains")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH", env = "DENJOY_CONFIG")]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true, value_name = "K", env = "DENJOY_THREADS")]
    threads: Option<usize>,
    /// Relative tolerance of the abelian integrals.
    #[arg(long, global = true, env = "DENJOY_QUAD_REL")]
    quad_rel: Option<f64>,
    /// Absolute tolerance of the abelian integrals.
    #[arg(long, global = true, env = "DENJOY_QUAD_ABS")]
    quad_abs: Option<f64>,
    /// Residual tolerance of the Jacobi inversion.
    #[arg(long, global = true, env = "DENJOY_INVERSION_TOL")]
    inversion_tol: Option<f64>,
    /// Newton iteration cap of the Jacobi inversion.
    #[arg(long, global = true, env = "DENJOY_INVERSION_MAX_ITER")]
    inversion_max_iter: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Green function, Martin function and θ over the λ-grid.
    Green,
    /// Reproducing kernel k(λ, λ₀) over the λ-grid.
    Kernel,
    /// m₊, m₋ and R₀ over the λ-grid.
    MFunction,
    /// Flow quantities along the x-grid.
    Flow,
    /// Normalized transfer matrices for every λ and x.
    Transfer,
    /// Kernel identity residuals and Plancherel checks.
    FourierCheck,
    /// Runs the acceptance suite and writes a JSON report.
    Acceptance,
    /// Runs the mode named in the configuration.
    Run,
}

impl Command {
    fn mode(&self, cfg: &RunConfig) -> Result<Mode> {
        Ok(match self {
            Command::Green => Mode::Green,
            Command::Kernel => Mode::Kernel,
            Command::MFunction => Mode::MFunction,
            Command::Flow => Mode::Flow,
            Command::Transfer => Mode::Transfer,
            Command::FourierCheck => Mode::FourierCheck,
            Command::Acceptance => Mode::Acceptance,
            Command::Run => cfg
                .mode
                .ok_or_else(|| denjoy::Error::invalid("the configuration names no mode"))?,
        })
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<denjoy::Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return 4;
        }
    }
    1
}

fn execute(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None if matches!(cli.command, Command::Acceptance) => RunConfig::default(),
        None => return Err(denjoy::Error::invalid("--config is required for this mode").into()),
    };
    cfg.tolerances = cfg.tolerances.merged(Tolerances {
        quad_rel: g.quad_rel,
        quad_abs: g.quad_abs,
        inversion: g.inversion_tol,
        inversion_max_iter: g.inversion_max_iter,
    });
    let mode = cli.command.mode(&cfg)?;
    cfg.validate(mode)?;
    if cfg.is_experimental() {
        eprintln!("warning: geometric gap families are experimental");
    }
    if let Some(k) = g.threads {
        if k == 0 {
            return Err(denjoy::Error::invalid("--threads must be positive").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }

    let mut buf = Vec::new();
    modes::run(mode, &cfg, &mut buf)?;
    match g.out.or(cfg.out.clone()) {
        Some(path) => std::fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&buf)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
