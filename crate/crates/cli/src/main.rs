//! `nphoton`: batch front-end writing CSV tables with a JSON provenance header.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod dynamics;
mod error;
mod grid;
mod output;
mod spectrum;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nphoton_core::models::Regime;

use error::{CliError, EXIT_CONFIG};
use output::Table;

pub const THREADS_ENV: &str = "DISPERSIVE_NPHOTON_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Rwa,
    Nonrwa,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Rwa => Regime::Rwa,
            RegimeArg::Nonrwa => Regime::NonRwa,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nphoton", version, about = "Multiphoton qubit-oscillator spectra, dispersive formulas and dynamics")]
struct Cli {
    /// Worker threads for grid evaluation (default: all cores). The
    /// DISPERSIVE_NPHOTON_THREADS environment variable takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Append `<column>_scaled` copies of energy columns multiplied by this factor.
    #[arg(long, global = true)]
    physical_scale: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tracked numerical levels over a coupling sweep, with analytic comparisons.
    Spectrum(spectrum::SpectrumArgs),
    /// Subsystem fidelities of full versus dispersive evolution.
    Dynamics(dynamics::DynamicsArgs),
    /// Commutator coefficients C+ and C-.
    CoeffTable(tables::CoeffTableArgs),
    /// Dispersive and exact multiphoton JC levels.
    Levels(tables::LevelsArgs),
    /// Critical photon numbers over an order/detuning/coupling grid.
    CriticalNph(tables::CriticalArgs),
    /// Dressed qubit frequency for a coherent oscillator, both moment conventions.
    DressedFreq(tables::DressedArgs),
    /// Effective two-qubit frequencies and exchange coupling.
    #[command(name = "eff-2q")]
    Eff2q(tables::Eff2qArgs),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("{THREADS_ENV}='{v}' is not a positive integer")))?,
        ),
        Err(_) => flag,
    };
    if n == Some(0) {
        return Err(CliError::config("thread count must be at least 1"));
    }
    Ok(n)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(s) = cli.physical_scale {
        if !(s.is_finite() && s != 0.0) {
            return Err(CliError::config("--physical-scale must be finite and nonzero"));
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let emit = |t: &Table| t.write(cli.out.as_deref(), cli.physical_scale);
    pool.install(|| match &cli.command {
        Command::Spectrum(a) => {
            let (table, failure) = spectrum::run(a)?;
            emit(&table)?;
            failure.map_or(Ok(()), Err)
        }
        Command::Dynamics(a) => emit(&dynamics::run(a)?),
        Command::CoeffTable(a) => emit(&tables::coeff_table(a)?),
        Command::Levels(a) => emit(&tables::levels(a)?),
        Command::CriticalNph(a) => emit(&tables::critical_nph(a)?),
        Command::DressedFreq(a) => emit(&tables::dressed_freq(a)?),
        Command::Eff2q(a) => emit(&tables::eff_2q(a)?),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nphoton: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
