//! `fractel` - config-driven evaluation of the time-fractional telegraph
//! equation machinery: fundamental solution tables, Green function
//! tables, boundary value problem solves, an independent finite
//! difference check, convergence studies, and the identity battery.
//!
//! Exit codes: 0 success, 1 verification tolerance exceeded, 2 invalid
//! configuration, 3 numerical failure.

mod commands;
mod config;
mod expr;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fractel", version, about)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, env = "FRACTEL_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory for CSV artifacts.
    #[arg(long, global = true, env = "FRACTEL_OUT", default_value = "out")]
    out: PathBuf,

    /// Override the kernel evaluation tolerance.
    #[arg(long, global = true, env = "FRACTEL_TOL")]
    tol: Option<f64>,

    /// Worker threads for grid solves (0 = all cores).
    #[arg(long, global = true, env = "FRACTEL_THREADS", default_value_t = 0)]
    threads: usize,

    /// Reserved for future stochastic paths; accepted and ignored.
    #[arg(long, global = true, env = "FRACTEL_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Tabulate the fundamental solution and requested derivatives.
    Gamma,
    /// Tabulate the Green function for a fixed source point.
    Green,
    /// Solve the boundary value problem and verify the field.
    Solve,
    /// Run the finite difference reference solver.
    Oracle,
    /// Solve with both methods and cross-validate.
    Verify,
    /// Grid-halving convergence study of the difference scheme.
    Convergence,
    /// Run the analytic identity battery.
    Identities,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if cli.threads > 0 {
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    if cli.seed.is_some() {
        log::info!("--seed is reserved; no stochastic path consumes it yet");
    }

    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config PATH (or FRACTEL_CONFIG) is required");
            return ExitCode::from(2);
        }
    };
    let cfg = match config::RunConfig::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.0);
            return ExitCode::from(2);
        }
    };

    let command = match cli.command {
        Some(c) => c,
        None => match cfg.command.as_deref() {
            Some("gamma") => Command::Gamma,
            Some("green") => Command::Green,
            Some("solve") => Command::Solve,
            Some("oracle") => Command::Oracle,
            Some("verify") => Command::Verify,
            Some("convergence") => Command::Convergence,
            Some("identities") => Command::Identities,
            Some(other) => {
                eprintln!("error: unknown command \"{other}\" in config");
                return ExitCode::from(2);
            }
            None => {
                eprintln!("error: no command given (subcommand or config \"command\")");
                return ExitCode::from(2);
            }
        },
    };

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(2);
    }

    let outcome = match command {
        Command::Gamma => commands::run_gamma(&cfg, &cli.out, cli.tol),
        Command::Green => commands::run_green(&cfg, &cli.out, cli.tol),
        Command::Solve => commands::run_solve(&cfg, &cli.out, cli.tol),
        Command::Oracle => commands::run_oracle(&cfg, &cli.out),
        Command::Verify => commands::run_verify(&cfg, &cli.out, cli.tol),
        Command::Convergence => commands::run_convergence(&cfg, &cli.out),
        Command::Identities => commands::run_identities(&cfg),
    };

    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(commands::RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
