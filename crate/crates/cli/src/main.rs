//! `gaam`: command-line front end for the simulator and its checks.
//!
//! Exit status: 0 all checks pass, 1 a check was violated, 2 usage or config
//! error, 3 numerical fault (blow-up guard, non-convergence).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gaam_core::exec::with_workers;
use gaam_core::harness::commands::{self, exit_code, CommandOutcome, Suite, EXIT_USAGE};
use gaam_core::harness::RunConfig;
use gaam_core::Result;

#[derive(Parser, Debug)]
#[command(name = "gaam", version, about = "Pseudo-spectral simulator and verification harness for the damped fractional alpha-model")]
struct Cli {
    /// Run configuration (flat key = value file); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides out.dir and $GAAM_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and batch checks.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Fixed-point tolerance (overrides tol.picard).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Generic constant of the smallness conditions (overrides tol.C).
    #[arg(long = "C", global = true)]
    c_const: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate and write trajectory.csv and final.ckpt.
    Simulate,
    /// Solve for the stationary state and report the smallness certificates.
    Stationary,
    /// Run one verification suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Sweep the parameter grid from the sweep.* keys.
    Sweep,
    /// Print the attractor dimension bound.
    DimBound,
    /// Check the trace inequality for the linearized operator.
    Lyapunov,
    /// Print the effective configuration.
    ShowConfig,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Energy,
    Absorbing,
    Decay,
    Lyapunov,
    Dimension,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Energy => Suite::Energy,
            SuiteArg::Absorbing => Suite::Absorbing,
            SuiteArg::Decay => Suite::Decay,
            SuiteArg::Lyapunov => Suite::Lyapunov,
            SuiteArg::Dimension => Suite::Dimension,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(t) = cli.tol {
        cfg.tol.picard = t;
    }
    if let Some(c) = cli.c_const {
        cfg.tol.smallness_c = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<CommandOutcome> {
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(cfg),
        Command::Stationary => commands::cmd_stationary(cfg),
        Command::Verify { suite } => commands::cmd_verify(cfg, (*suite).into()),
        Command::Sweep => commands::cmd_sweep(cfg),
        Command::DimBound => commands::cmd_dim_bound(cfg),
        Command::Lyapunov => commands::cmd_lyapunov(cfg),
        Command::ShowConfig => unreachable!("handled before dispatch"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    if matches!(cli.command, Command::ShowConfig) {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    match with_workers(cli.workers, || run(&cli, &cfg)) {
        Ok(outcome) => {
            println!("{:#}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
