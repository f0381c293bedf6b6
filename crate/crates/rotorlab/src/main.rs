use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rotorlab::config::{ExperimentConfig, ExperimentKind};
use rotorlab::experiments::run_experiment;

#[derive(Parser)]
#[command(name = "rotorlab", version, about = "Random circle diffeomorphism experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for manifest, data and summary files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores); never changes output bytes
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Order-2 expansion of the circle Lyapunov exponent vs Monte Carlo
    LyapunovExpansion(RunArgs),
    /// Stationary density: first-order expansion vs empirical histogram
    StationaryDensity(RunArgs),
    /// Iterative conjugation scheme for circle ensembles
    KamCircle(RunArgs),
    /// Commutator defect bound for circle ensembles
    CommutatorCircle(RunArgs),
    /// Order-2 expansion of the matrix Lyapunov exponent vs Monte Carlo
    MatrixExpansion(RunArgs),
    /// Anderson model Lyapunov exponent vs the small-coupling formula
    Schrodinger(RunArgs),
    /// One-step conjugation scheme for SL(2,R) ensembles
    KamMatrix(RunArgs),
    /// Commutator defect for SL(2,R) ensembles
    CommutatorMatrix(RunArgs),
    /// Parse and validate a config file without running anything
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the available experiments
    List,
}

fn expected_kind(cmd: &Command) -> Option<ExperimentKind> {
    use Command::*;
    Some(match cmd {
        LyapunovExpansion(_) => ExperimentKind::LyapunovExpansion,
        StationaryDensity(_) => ExperimentKind::StationaryDensity,
        KamCircle(_) => ExperimentKind::KamCircle,
        CommutatorCircle(_) => ExperimentKind::CommutatorCircle,
        MatrixExpansion(_) => ExperimentKind::MatrixExpansion,
        Schrodinger(_) => ExperimentKind::Schrodinger,
        KamMatrix(_) => ExperimentKind::KamMatrix,
        CommutatorMatrix(_) => ExperimentKind::CommutatorMatrix,
        Validate { .. } | List => return None,
    })
}

fn run_args(cmd: &Command) -> Option<&RunArgs> {
    use Command::*;
    match cmd {
        LyapunovExpansion(a) | StationaryDensity(a) | KamCircle(a) | CommutatorCircle(a)
        | MatrixExpansion(a) | Schrodinger(a) | KamMatrix(a) | CommutatorMatrix(a) => Some(a),
        Validate { .. } | List => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli.command) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cmd: &Command) -> anyhow::Result<bool> {
    match cmd {
        Command::List => {
            for name in [
                "lyapunov-expansion",
                "stationary-density",
                "kam-circle",
                "commutator-circle",
                "matrix-expansion",
                "schrodinger",
                "kam-matrix",
                "commutator-matrix",
            ] {
                println!("{name}");
            }
            return Ok(true);
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(config)?;
            cfg.validate()?;
            println!("ok: {:?} experiment, seed {}", cfg.experiment, cfg.seed);
            return Ok(true);
        }
        _ => {}
    }
    let args = run_args(cmd).expect("run command");
    let kind = expected_kind(cmd).expect("run command");
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if cfg.experiment != kind {
        anyhow::bail!(
            "config declares `{:?}` but the `{:?}` subcommand was invoked",
            cfg.experiment,
            kind
        );
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let summary = run_experiment(&cfg, &args.out, args.threads)?;
    print!("{}", summary.render());
    Ok(summary.passed())
}
