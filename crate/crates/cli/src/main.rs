use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uwbsim_cli::lemmas::{check_lemma, LEMMAS, TOLERANCE};
use uwbsim_cli::run::{run, Command};
use uwbsim_cli::spec::parse_spec;
use uwbsim_cli::{CliError, Result};

/// Environment variable holding the worker thread count.
const WORKERS_ENV: &str = "UWB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "uwbsim", version, about = "TH-IR UWB bit error probability: analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment spec (JSON).
    spec: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's output CSV path.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evaluate the requested closed-form BEPs.
    Analyze(RunArgs),
    /// Estimate BEP by Monte Carlo simulation.
    Simulate(RunArgs),
    /// Both, with the relative error of each analytic value.
    Compare(RunArgs),
    /// Check the interference variance lemmas against simulation.
    ValidateLemmas {
        /// Run a single lemma (1-5).
        #[arg(long)]
        lemma: Option<u8>,
        /// Decision symbols per check.
        #[arg(long, default_value_t = 100_000)]
        symbols: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("{WORKERS_ENV}: {e}")))
}

fn execute(args: RunArgs, command: Command) -> Result<()> {
    let mut spec = parse_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = args.output {
        spec.output_path = out;
    }
    let out = run(&spec, command)?;
    println!(
        "wrote {} rows to {} (manifest {})",
        out.rows.len(),
        out.csv_path.display(),
        out.manifest_path.display()
    );
    Ok(())
}

fn validate_lemmas(lemma: Option<u8>, symbols: usize, seed: u64) -> Result<()> {
    let selected: Vec<u8> = match lemma {
        Some(l) => vec![l],
        None => LEMMAS.to_vec(),
    };
    let mut failures = 0;
    for l in selected {
        for check in check_lemma(l, symbols, seed)? {
            let ok = check.passed();
            failures += usize::from(!ok);
            println!(
                "lemma {} {:<22} {} empirical {:.6} closed form {:.6} ({:.2}% vs {:.0}% tolerance)",
                check.lemma,
                check.label,
                if ok { "PASS" } else { "FAIL" },
                check.empirical,
                check.closed_form,
                100.0 * check.relative_error(),
                100.0 * TOLERANCE
            );
        }
    }
    if failures > 0 {
        return Err(CliError::LemmaFailures(failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match cli.command {
        Cmd::Analyze(a) => execute(a, Command::Analyze),
        Cmd::Simulate(a) => execute(a, Command::Simulate),
        Cmd::Compare(a) => execute(a, Command::Compare),
        Cmd::ValidateLemmas { lemma, symbols, seed } => validate_lemmas(lemma, symbols, seed),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
