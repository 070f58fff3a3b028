//! `jprlc`: register point clouds, run synthetic benchmarks, score poses.
//!
//! Exit status is 0 on success, 1 on a runtime or solver failure and 2 on a
//! usage or configuration error.

mod bench;
mod eval;
mod output;
mod register;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "jprlc",
    version,
    about = "Joint probabilistic registration of multiple point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register two or more clouds into a common frame.
    Register(register::Args),
    /// Sweep one degradation parameter over repeated synthetic trials.
    Bench(bench::Args),
    /// Pose RMSE between calculated and ground-truth transforms.
    Eval(eval::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = jprlc_core::parallel::configure_global_pool()
        .map_err(anyhow::Error::from)
        .and_then(|threads| {
            log::info!("using {threads} worker threads");
            match cli.command {
                Command::Register(args) => register::run(args),
                Command::Bench(args) => bench::run(args),
                Command::Eval(args) => eval::run(args),
            }
        });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let usage = e
        .chain()
        .filter_map(|c| c.downcast_ref::<jprlc_core::Error>())
        .any(jprlc_core::Error::is_usage);
    if usage {
        2
    } else {
        1
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    jprlc_core::Error::Config(msg.into()).into()
}
