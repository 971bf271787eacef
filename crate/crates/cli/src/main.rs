use anyhow::Result;
use clap::{Parser, Subcommand};
use coglink_cli::{cmd_gradcheck, cmd_report, cmd_run, load_config, RunConfig, Verbosity};
use std::path::PathBuf;
use std::process::ExitCode;

/// Slot-based simulator of a cognitive radio link under an over-the-air
/// spectrum poisoning attack.
#[derive(Parser)]
#[command(name = "coglink", version, about)]
struct Cli {
    /// Suppress normal output.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Print per-run reports in addition to aggregates.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train both agents and evaluate the requested modes; writes per-run
    /// trace CSVs, per-run JSON reports, and an aggregate report.
    Run {
        /// Config file (flat key = value format). Defaults apply when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the run modes (comma separated: baseline,poison,jam).
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<String>>,
        /// Override the replication count.
        #[arg(short, long)]
        replications: Option<usize>,
        /// Override the output directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Verify the analytic gradients against finite differences plus the
    /// softmax and cross-entropy properties; nonzero exit on failure.
    Gradcheck {
        /// Number of random model/batch pairs.
        #[arg(long, default_value_t = 5)]
        pairs: usize,
        #[arg(long, default_value_t = 1234)]
        seed: u64,
        /// Negative control: corrupt one gradient component (must fail).
        #[arg(long, hide = true)]
        perturb: bool,
    },
    /// Re-render the link metrics of a saved trace CSV.
    Report {
        trace: PathBuf,
        /// Emit machine-readable JSON instead of the one-line summary.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let verbosity = if cli.quiet {
        Verbosity::Quiet
    } else if cli.verbose {
        Verbosity::Verbose
    } else {
        Verbosity::Normal
    };

    match cli.command {
        Command::Run {
            config,
            seed,
            modes,
            replications,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            if let Some(modes) = modes {
                cfg.modes = modes
                    .iter()
                    .map(|m| m.parse().map_err(anyhow::Error::msg))
                    .collect::<Result<_>>()?;
            }
            if let Some(replications) = replications {
                cfg.replications = replications;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            cfg.validate()?;
            cmd_run(&cfg, verbosity)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck {
            pairs,
            seed,
            perturb,
        } => {
            let report = cmd_gradcheck(pairs, seed, perturb, cli.quiet);
            Ok(if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Report { trace, json } => {
            println!("{}", cmd_report(&trace, json)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
