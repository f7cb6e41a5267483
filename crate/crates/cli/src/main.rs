//! `catclust`: command-line front end for categorical clustering.

mod commands;
mod datasets;
mod error;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = concat!("catclust ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "catclust", version, about = "Clustering of categorical data: k-modes and k-medoids")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "CATCLUST_THREADS")]
    threads: Option<usize>,
    /// Dataset cache directory.
    #[arg(long, global = true, env = datasets::DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// TOML file listing known datasets (defaults to the built-in list).
    #[arg(long, global = true)]
    datasets_config: Option<PathBuf>,
    /// Never download; only use cached files.
    #[arg(long, global = true, env = "CATCLUST_OFFLINE")]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download known datasets into the cache directory.
    Fetch(commands::FetchArgs),
    /// Run one clustering algorithm and report the result.
    Run(run::RunArgs),
    /// Compare measured results with the published votes / mushroom numbers.
    Reproduce(commands::ReproduceArgs),
    /// Run a randomized property audit; exit 1 on any violation.
    Verify(commands::VerifyArgs),
    /// Time the distance matrix and both medoid solvers on synthetic data.
    Bench(commands::BenchArgs),
}

pub struct Context {
    pub data_dir: PathBuf,
    pub datasets_config: Option<PathBuf>,
    pub offline: bool,
}

/// Writes `text` to `path`, or to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            // a closed pipe is not worth a failure exit
            let _ = out.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let ctx = Context {
        data_dir: datasets::data_dir(cli.data_dir.as_deref()),
        datasets_config: cli.datasets_config.clone(),
        offline: cli.offline,
    };
    match &cli.command {
        Command::Fetch(a) => commands::fetch(a, &ctx),
        Command::Run(a) => run::execute(a, &ctx),
        Command::Reproduce(a) => commands::reproduce(a, &ctx),
        Command::Verify(a) => commands::verify(a, &ctx),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
