//! `scars` command-line front end.
//!
//! Exit codes: 0 success, 1 computation failure (or failed checks), 2 usage
//! error.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Format, Overrides, RunConfig};
use output::{check_fresh, metadata, render, write_run, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "scars",
    version,
    about = "QFI diagnostics for scarred states of the PXP chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Eigenvalues, Néel overlaps, scar and zero-mode flags.
    Spectrum,
    /// Per-eigenstate QFI density and entanglement witness.
    EigenstateQfi,
    /// Window-averaged quench QFI over several chain lengths, with a line fit.
    QfiScaling,
    /// QFI, M_S moments and return probability after a quench.
    Quench,
    /// Infinite-time QFI of a quench.
    DiagEnsemble,
    /// Closed-form tower QFI against the spin-representation oracle.
    Su2Tower,
    /// Forward-scattering ladder closure and first revival.
    Fsa,
    /// Sublattice-symmetric subspace quasimodes and Néel quench.
    Symsub,
    /// Exact MPS scars: eigenstate residuals and QFI by three routes.
    MpsCheck,
    /// Blockade-valid configurations as bitstrings.
    Basis,
    /// Coordinate listing of an operator in the Fock basis.
    Operator {
        #[arg(long, value_enum, default_value = "hamiltonian")]
        which: config::OperatorKind,
    },
    /// Oracle-equivalence suite.
    Selftest {
        /// Drop one PXP matrix element before the hermiticity check.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::EigenstateQfi => "eigenstate-qfi",
            Command::QfiScaling => "qfi-scaling",
            Command::Quench => "quench",
            Command::DiagEnsemble => "diag-ensemble",
            Command::Su2Tower => "su2-tower",
            Command::Fsa => "fsa",
            Command::Symsub => "symsub",
            Command::MpsCheck => "mps-check",
            Command::Basis => "basis",
            Command::Operator { .. } => "operator",
            Command::Selftest { .. } => "selftest",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::MpsCheck => Format::Json,
            _ => Format::Csv,
        }
    }

    fn run(&self, cfg: &RunConfig) -> anyhow::Result<Outcome> {
        match *self {
            Command::Spectrum => commands::spectrum(cfg),
            Command::EigenstateQfi => commands::eigenstate_qfi(cfg),
            Command::QfiScaling => commands::qfi_scaling(cfg),
            Command::Quench => commands::quench(cfg),
            Command::DiagEnsemble => commands::diag_ensemble(cfg),
            Command::Su2Tower => commands::su2_tower(cfg),
            Command::Fsa => commands::fsa(cfg),
            Command::Symsub => commands::symsub(cfg),
            Command::MpsCheck => commands::mps_check(cfg),
            Command::Basis => commands::basis(cfg),
            Command::Operator { which } => commands::operator(cfg, which),
            Command::Selftest { inject_fault } => commands::selftest(cfg, inject_fault),
        }
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cfg = match RunConfig::resolve(&cli.overrides) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    if let Some(dir) = &cfg.out {
        if let Err(msg) = check_fresh(dir) {
            return usage_error(&msg);
        }
    }
    let command = cli.command;
    let format = cfg.format.unwrap_or(command.default_format());
    let start = Instant::now();
    let outcome = match command.run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e:#}", command.name());
            return ExitCode::from(1);
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let meta = metadata(command.name(), &cfg);
    let rendered: Vec<(String, String)> = outcome.artifacts.iter().map(|a| render(a, &meta, format)).collect();
    match &cfg.out {
        Some(dir) => {
            if let Err(e) = write_run(dir, &rendered, &meta, wall, outcome.failed) {
                eprintln!("error: writing {}: {e}", dir.display());
                return ExitCode::from(1);
            }
            eprintln!("wrote {} files to {} in {wall:.2} s", rendered.len() + 1, dir.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(rendered[0].1.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            if rendered.len() > 1 {
                eprintln!("{} further artifacts are written only with --out", rendered.len() - 1);
            }
            eprintln!("wall time {wall:.2} s");
        }
    }
    if outcome.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
