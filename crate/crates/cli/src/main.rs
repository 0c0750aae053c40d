//! `dirac`: runs eigenvalue, solution, kernel and remainder experiments from
//! a JSON configuration and writes CSV files plus a JSON report and manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, CliResult, Run};
use config::RunConfig;
use output::{OutputDir, RunHeader};

#[derive(Parser)]
#[command(
    name = "dirac",
    version,
    about = "Dirac system solver and eigenvalue asymptotics runner"
)]
struct Cli {
    /// JSON configuration file; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the normalised configuration with all defaults and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Locate eigenvalues over `n_range`.
    Eig,
    /// Eigenfunctions and their asymptotic approximants.
    Eigfun,
    /// Fundamental matrix by every method at `solve.mu`.
    Solve,
    /// Dump the transformation kernel on the triangle.
    Kernel,
    /// Remainder functionals and row-estimate margins over a sweep.
    Remainders,
    /// Full invariant suite; exits 1 if any check fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eig => "eig",
            Command::Eigfun => "eigfun",
            Command::Solve => "solve",
            Command::Kernel => "kernel",
            Command::Remainders => "remainders",
            Command::Verify => "verify",
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(config::ConfigError {
                    path: ".".into(),
                    message: format!("cannot read {}: {e}", path.display()),
                })
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> CliResult<bool> {
    let cfg = load_config(cli)?;
    if cli.print_config {
        println!("{}", cfg.to_json());
        return Ok(true);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config(config::ConfigError {
            path: ".".into(),
            message: "no subcommand given (see --help)".into(),
        }));
    };
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| {
                CliError::Config(config::ConfigError {
                    path: "--threads".into(),
                    message: e.to_string(),
                })
            })?;
    }
    let pair = cfg.pair()?;
    let mut run = Run {
        header: RunHeader::new(command.name(), &cfg),
        out: OutputDir::create(&cfg.out_dir)?,
        stages: Vec::new(),
        pair,
        cfg,
    };
    let (data, ok) = match command {
        Command::Eig => commands::eig(&mut run),
        Command::Eigfun => commands::eigfun(&mut run),
        Command::Solve => commands::solve(&mut run),
        Command::Kernel => commands::kernel(&mut run),
        Command::Remainders => commands::remainders(&mut run),
        Command::Verify => commands::verify(&mut run),
    }?;
    output::finish(run.out, &run.header, &data, &run.stages)?;
    for w in &run.header.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
