//! `qkdrate`: key-rate lower bounds from the command line.
//!
//! Exit codes: 0 on success, 2 when the statistics admit no yield/error
//! assignment, 1 for every other error.

mod plot;
mod report;
mod simulate;
mod sweep;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qkdrate_core::stats_file::StatsFile;
use qkdrate_core::{EngineConfig, ProtocolVariant, TruncationOrder};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qkdrate", version, about = "Certified key-rate lower bounds for BB84, CD, decoy and DSCD QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the key rate for one statistics file and print a CSV record.
    Compute {
        /// Statistics JSON file.
        stats: PathBuf,
        #[arg(long, default_value = "dscd")]
        variant: ProtocolVariant,
        #[command(flatten)]
        engine: EngineArgs,
        /// Ignore any security block and use zero statistical tolerances.
        #[arg(long)]
        asymptotic: bool,
    },
    /// Sweep mean photon number or distance; writes CSV and SVG into --out.
    Sweep {
        /// Sweep specification JSON file.
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Simulate the protocol and write a statistics file.
    Simulate {
        /// Protocol configuration JSON file.
        config: PathBuf,
        /// Output statistics file.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Photon-number truncation order n (at least 2).
    #[arg(long, default_value_t = 10)]
    truncation: usize,
    /// Partition resolution as N1xN2.
    #[arg(long, default_value = "40x40", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Error-correction inefficiency.
    #[arg(long = "f-ec", default_value_t = 1.16)]
    f_ec: f64,
    /// Refinement passes over the minimising cells.
    #[arg(long, default_value_t = 0)]
    refine: usize,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        let config = EngineConfig {
            truncation: TruncationOrder::new(self.truncation)?,
            grid: self.grid,
            f_ec: self.f_ec,
            refinement_passes: self.refine,
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("grid '{s}' is not of the form N1xN2"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("grid '{s}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QKDRATE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("QKDRATE_THREADS='{v}' is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn read_stats(path: &PathBuf) -> Result<StatsFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    StatsFile::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Compute { stats, variant, engine, asymptotic } => {
            let file = read_stats(&stats)?;
            let row = report::compute(&file, variant, &engine.config()?, asymptotic)?;
            report::write_rows(std::io::stdout().lock(), &[row])
        }
        Command::Sweep { spec, out, engine } => sweep::run(&spec, &out, &engine.config()?),
        Command::Simulate { config, out, seed } => simulate::run(&config, &out, seed),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let inconsistent = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<qkdrate_core::Error>(), Some(qkdrate_core::Error::Inconsistent(_))));
    if inconsistent {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // Usage errors share the generic failure code; 2 is reserved
            // for inconsistent statistics.
            return if err.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
