use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualavg_cli::{plot, run_config, validate_config, ConfigError};

/// Dual averaging experiments on continuous action sets.
#[derive(Parser, Debug)]
#[command(name = "dualavg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment(s) described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of sweep entries run in parallel.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Merge trace files into one plot-ready CSV.
    Plot {
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, workers } => {
            run_config(&config, out.as_deref(), workers).map(|dirs| {
                for d in dirs {
                    println!("wrote {}", d.display());
                }
            })
        }
        Command::Plot { traces, out } => plot::merge(&traces, &out).map(|rows| {
            println!("wrote {rows} rows to {}", out.display());
        }),
        Command::Validate { config } => validate_config(&config).map(|lines| {
            for l in lines {
                println!("ok {l}");
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
