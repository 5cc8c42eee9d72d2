use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gooed::study::{self, Command, RunOptions, StudyConfig};
use gooed::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Sweep,
    Optimize,
    Validate,
    PdeDemo,
}

/// Goal-oriented Bayesian optimal experimental design studies.
///
/// Exit codes: 0 success, 2 validation failure, 3 config error, 4 runtime error.
#[derive(Debug, Parser)]
#[command(name = "gooed", version)]
struct Args {
    command: Cmd,
    /// Study config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Solver grid dx = 0.01, dt = 5e-4 instead of dx = 0.05, dt = 2.5e-3.
    #[arg(long)]
    paper_resolution: bool,
    /// Write a gnuplot script next to each CSV.
    #[arg(long)]
    emit_plot_script: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cmd = match args.command {
        Cmd::Sweep => Command::Sweep,
        Cmd::Optimize => Command::Optimize,
        Cmd::Validate => Command::Validate,
        Cmd::PdeDemo => Command::PdeDemo,
    };
    let result = StudyConfig::load(&args.config).and_then(|cfg| {
        let opts = RunOptions {
            out: args.out.clone(),
            seed: args.seed,
            threads: args.threads,
            paper_resolution: args.paper_resolution,
            emit_plot_script: args.emit_plot_script,
        };
        study::run(cmd, &cfg, &opts)
    });
    match result {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(if outcome.passed { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::UnsupportedDimension(_) | Error::Dimension { .. } | Error::Domain { .. } => 3,
                _ => 4,
            };
            ExitCode::from(code)
        }
    }
}
