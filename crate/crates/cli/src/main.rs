//! `nanoqubit` command-line driver.
//!
//! Exit codes: 0 success, 2 finished with numerical warnings or sweep holes,
//! 1 error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nanoqubit::{BiasPoint, Config};

pub const THREADS_ENV: &str = "QBITNEGF_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nanoqubit", version, about = "Dual-gate nanowire charge-qubit simulator")]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV files and the manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; overrides QBITNEGF_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write hamiltonian.csv for commands that build a device.
    #[arg(long, global = true)]
    pub dump_hamiltonian: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct BiasArgs {
    #[arg(long)]
    pub vg1: Option<f64>,
    #[arg(long)]
    pub vg2: Option<f64>,
    /// Pulse increment on gate 2, V.
    #[arg(long, allow_negative_numbers = true)]
    pub dvg2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub vd: Option<f64>,
}

impl BiasArgs {
    pub fn apply(&self, base: BiasPoint) -> BiasPoint {
        BiasPoint::new(
            self.vg1.unwrap_or(base.vg1),
            self.vg2.unwrap_or(base.vg2),
            self.dvg2.unwrap_or(base.delta_vg2),
            self.vd.unwrap_or(base.vd),
        )
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transverse mode energies of the cross-section.
    Modes,
    /// Self-consistent potential, band profile and residual history.
    Scf(BiasArgs),
    /// Occupied LDOS and transmission at the converged potential.
    Ldos(BiasArgs),
    /// Drain current over a drain-bias sweep.
    Iv {
        #[command(flatten)]
        bias: BiasArgs,
        /// start:stop:step in V.
        #[arg(long, default_value = "0:0.05:0.01")]
        vd_sweep: String,
    },
    /// Pulse-current trace and its characteristic times.
    Pulse {
        #[command(flatten)]
        bias: BiasArgs,
        #[arg(long)]
        tmax_ns: Option<f64>,
        #[arg(long)]
        nt: Option<usize>,
    },
    /// Current with and without phonons versus an imposed level gap.
    PhononScan {
        #[command(flatten)]
        bias: BiasArgs,
        /// Comma-separated gaps in meV.
        #[arg(long, default_value = "10,25,50,100,200,350,500")]
        gaps: String,
    },
    /// Dot occupation at zero drain bias; optionally the occupancy onsets.
    InitCheck {
        #[command(flatten)]
        bias: BiasArgs,
        #[arg(long)]
        onsets: bool,
    },
    /// Positional probability over a ΔVG2 sweep at zero drain bias.
    Manipulate {
        #[command(flatten)]
        bias: BiasArgs,
        /// start:stop:step in mV.
        #[arg(long, default_value = "30:48:2")]
        dvg2_sweep: String,
    },
    /// Bloch angles over gate sweeps at zero drain bias.
    Bloch {
        #[command(flatten)]
        bias: BiasArgs,
        /// start:stop:step in V.
        #[arg(long, default_value = "1.12:1.16:0.01")]
        vg1_sweep: String,
        #[arg(long)]
        vg2_sweep: Option<String>,
    },
    /// Drain-current map over both gate voltages.
    Stability {
        #[arg(long, default_value = "1.12:1.16:0.002")]
        vg1: String,
        #[arg(long, default_value = "1.33:1.35:0.001")]
        vg2: String,
        #[arg(long, default_value_t = 0.042)]
        vd: f64,
    },
    /// Closed-form oracle suite.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Scf(_) => "scf",
            Command::Ldos(_) => "ldos",
            Command::Iv { .. } => "iv",
            Command::Pulse { .. } => "pulse",
            Command::PhononScan { .. } => "phonon-scan",
            Command::InitCheck { .. } => "init-check",
            Command::Manipulate { .. } => "manipulate",
            Command::Bloch { .. } => "bloch",
            Command::Stability { .. } => "stability",
            Command::Selftest => "selftest",
        }
    }
}

fn worker_count(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a count"))?;
            anyhow::ensure!(n > 0, "{THREADS_ENV} must be at least 1");
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let threads = worker_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (run, config) = commands::dispatch(&cli, config)?;
    let manifest = output::persist(&run, &cli.out, cli.command.name(), &args, threads, &config)?;
    for line in &run.summary {
        println!("{line}");
    }
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("manifest: {}", manifest.display());
    Ok(if run.failed {
        ExitCode::from(1)
    } else if run.warnings.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
