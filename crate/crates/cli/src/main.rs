mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ModeName, SchemaError};

#[derive(Parser, Debug)]
#[command(name = "qmps", version, about = "Qubit-efficient variational training on simulated hardware")]
struct Cli {
    /// Worker threads for shot and term parallelism (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an ansatz on the J1-J2 Heisenberg model.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeName>,
        /// Resume from a parameter snapshot written by an earlier run.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also write the architecture as `circuit.json`.
        #[arg(long)]
        dump_circuit: bool,
        /// Also write the Hamiltonian as `hamiltonian.json`.
        #[arg(long)]
        dump_hamiltonian: bool,
        /// Also write per-step wall time to `timing.csv`.
        #[arg(long)]
        timing: bool,
    },
    /// Two-point correlation matrix of a trained state.
    Correlations {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeName,
        #[arg(long, default_value = "z")]
        axis: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Gradient variance versus chain length or virtual qubits.
    Gradvar {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cluster-state preparation, sampling and SLOCC filtering.
    ClusterDemo {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        gamma: f64,
        /// Filtered site (0-based); defaults to the middle of the chain.
        #[arg(long)]
        site: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<SchemaError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<qmps::Error>() {
            return match e {
                qmps::Error::Contract(_) => 2,
                qmps::Error::Capacity { .. } => 3,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(config::schema("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            mode,
            params,
            dump_circuit,
            dump_hamiltonian,
            timing,
        } => commands::train(commands::TrainArgs {
            config,
            out,
            seed,
            mode,
            params,
            dump_circuit,
            dump_hamiltonian,
            timing,
        }),
        Command::Correlations {
            config,
            params,
            out,
            mode,
            axis,
            seed,
        } => commands::correlations(&config, &params, out.as_deref(), mode, &axis, seed),
        Command::Gradvar { config, out, seed } => commands::gradvar(&config, out.as_deref(), seed),
        Command::ClusterDemo {
            n,
            theta,
            gamma,
            site,
            shots,
            seed,
            out,
        } => commands::cluster_demo(n, theta, gamma, site, shots, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
