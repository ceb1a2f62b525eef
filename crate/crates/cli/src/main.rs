//! Command-line front end: parse arguments, load the INI config, run one
//! experiment suite, and gate the exit code on its acceptance checks.

use clap::Parser;
use oscistrip_core::harness::{run_suite, ExperimentConfig, Suite};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "oscistrip",
    version,
    about = "Numerical lab for reaction-diffusion problems with boundary-strip concentration"
)]
struct Cli {
    /// Suite to run: mu, conc, coercivity, operators, semigroup, equilibria,
    /// attractors, or full
    suite: String,

    /// Path to the INI experiment configuration
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides the config's run section)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for all randomized ingredients (overrides the config)
    #[arg(long)]
    seed: Option<u64>,

    /// Worker thread cap for the linear algebra backend
    #[arg(long, env = "OSCISTRIP_THREADS")]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, oscistrip_core::Error> {
    let suite: Suite = cli.suite.parse()?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }
    if let Some(threads) = cfg.threads {
        // The dense eigensolver parallelizes through the global rayon pool,
        // which reads this variable on first use.
        std::env::set_var("RAYON_NUM_THREADS", threads.to_string());
    }
    let report = run_suite(&cfg, suite)?;
    print!("{}", report.summary_text());
    Ok(report.acceptance_passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
