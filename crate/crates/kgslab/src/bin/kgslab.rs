use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use kgslab::config::{load_config, ExperimentKind};
use kgslab::experiments::run;

#[derive(Parser)]
#[command(name = "kgslab", version, about = "Radial spectral laboratory for the coupled nucleon-meson system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        /// Path to the experiment config (flat TOML; see docs/formats.md).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep cells (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the available experiments.
    ListExperiments,
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn main_inner() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("thread pool")?;
            }
            let mut cfg = load_config(&config).context("loading config")?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let outcome = run(&cfg).context("running experiment")?;
            println!(
                "{}: {} (summary: {})",
                cfg.kind.name(),
                if outcome.pass { "PASS" } else { "FAIL" },
                outcome.summary_path.display()
            );
            Ok(outcome.pass)
        }
        Command::ListExperiments => {
            for kind in ExperimentKind::all() {
                println!("{}", kind.name());
            }
            Ok(true)
        }
    }
}
