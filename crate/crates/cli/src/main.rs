//! `tcoh`: command-line front end to the `tau_coherence` library.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "tcoh", version, about = "Tau-coherence of large Gaussian observation matrices")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Print a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TCOH_THREADS")]
    pub threads: Option<usize>,
    /// Memory budget in bytes; drives the default packet width.
    #[arg(long, global = true, default_value_t = 1 << 30)]
    pub memory_budget: u64,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Generate an observation matrix into a TCOH file.
    Gen(commands::GenArgs),
    /// Tau-coherence of a TCOH matrix.
    Coherence(commands::CoherenceArgs),
    /// Monte-Carlo study of the normalized tau-coherence.
    Mc(commands::McArgs),
    /// Goodness of fit of a sample file against the limit law.
    Gof(commands::GofArgs),
    /// Check the rate hypotheses for the default schedule.
    Check(commands::CheckArgs),
    /// Sizes of the band, transition and outer pair sets.
    Card(commands::CardArgs),
    /// Monte-Carlo tail probability of a single inner product.
    Tailprob(commands::TailArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    log::info!("{}", serde_json::to_string(&cli).unwrap_or_default());
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
