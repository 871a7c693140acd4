use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dqfl_cli::{
    cmd_compare, cmd_ingest, cmd_report, cmd_rollback, cmd_run, cmd_verify, CliError, ExperimentConfig, Profile,
    RollbackOptions, RunOptions, RunReport,
};
use dqfl_core::fed::Topology;

/// Blockchain-anchored decentralized quantum federated learning simulator.
#[derive(Debug, Parser)]
#[command(name = "dqfl", version)]
struct Cli {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `desk` (20 rounds, 500 samples per client) or `full`.
    #[arg(long, global = true)]
    profile: Option<Profile>,
    /// Parallel client-training workers; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output directory; defaults to the configured `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize the prepared dataset (local IDX files only).
    Ingest {
        /// Directory holding the IDX files; overrides `data.mnist_dir`.
        dir: Option<PathBuf>,
    },
    /// Run the configured method(s).
    Run,
    /// Run several methods, or DQFL under several topologies, side by side.
    Compare {
        /// Comma-separated methods: DENSE_CENTRAL, DENSE_FL, QNN_CENTRAL, QFL_CENTRAL, DQFL.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        /// Comma-separated topologies for DQFL: star, ring, random.
        #[arg(long, value_delimiter = ',')]
        topologies: Vec<Topology>,
    },
    /// Verify every chain and payload in a ledger directory.
    Verify { dir: PathBuf },
    /// Resume a saved run from a committed round on a new branch.
    Rollback {
        /// Ledger directory of one series, e.g. `<out>/ledger/DQFL`.
        dir: PathBuf,
        #[arg(long)]
        round: u64,
        /// Rounds to run after the restart point.
        #[arg(long)]
        rounds: Option<u64>,
    },
    /// Charts and summary from metrics files.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = cli.profile {
        cfg.apply_profile(p);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_options(cli: &Cli) -> Result<RunOptions, CliError> {
    let config = load_config(cli)?;
    let out = cli.out.clone().unwrap_or_else(|| config.out_dir.clone());
    Ok(RunOptions {
        config,
        out,
        workers: cli.workers,
    })
}

fn print_run(report: &RunReport) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", report.summary);
    println!("outputs in {}", report.out.display());
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    if cli.workers == 0 {
        return Err(CliError::config("--workers must be positive"));
    }
    match &cli.command {
        Command::Ingest { dir } => {
            let mut cfg = load_config(&cli)?;
            if let Some(d) = dir {
                cfg.data.mnist_dir = d.clone();
            }
            let out = cli.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
            print!("{}", cmd_ingest(&cfg, &out)?);
        }
        Command::Run => print_run(&cmd_run(&run_options(&cli)?)?),
        Command::Compare { methods, topologies } => {
            print_run(&cmd_compare(&run_options(&cli)?, methods, topologies)?)
        }
        Command::Verify { dir } => {
            let outcome = cmd_verify(dir)?;
            for line in outcome.lines() {
                println!("{line}");
            }
            return Ok(outcome.exit_code());
        }
        Command::Rollback { dir, round, rounds } => {
            let report = cmd_rollback(&RollbackOptions {
                ledger_dir: dir.clone(),
                round: *round,
                seed: cli.seed,
                rounds: *rounds,
                workers: cli.workers,
                out: cli.out.clone(),
            })?;
            print_run(&report);
        }
        Command::Report { files } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for p in cmd_report(files, &out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(0)
}
