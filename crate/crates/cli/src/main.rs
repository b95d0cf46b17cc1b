//! `anderson-ent`: disorder sweeps, entanglement profiles and dynamics as CSV.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anderson_core::Boundary;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "anderson-ent", version, about = "Entanglement in the disordered 1D Anderson model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every experiment. Each falls back to the config file, then to the
/// subcommand default.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Number of lattice sites N.
    #[arg(long)]
    pub size: Option<usize>,
    /// Disorder strengths: `start:stop:step` or a comma list.
    #[arg(long, alias = "lambda")]
    pub lambdas: Option<String>,
    /// Disorder realizations per λ.
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Boundary condition: periodic or open.
    #[arg(long)]
    pub bc: Option<Boundary>,
    /// Hopping amplitude t.
    #[arg(long)]
    pub hopping: Option<f64>,
    /// Uniform on-site offset V₀.
    #[arg(long)]
    pub v0: Option<f64>,
    /// Worker threads for the ensemble (default: $ANDERSON_ENT_WORKERS, else all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// `key = value` recipe file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Leave start time and wall time out of the header comments.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-state ⟨C⟩ against λ, with a double-exponential fit.
    GroundScan {
        #[command(flatten)]
        common: Common,
    },
    /// Nearest-neighbour concurrence along the chain for a list of λ.
    NnDist {
        #[command(flatten)]
        common: Common,
    },
    /// Concurrence between the localization center and the site at one offset, against λ.
    CenterPair {
        #[command(flatten)]
        common: Common,
        /// Offset j from the localization center.
        #[arg(long)]
        offset: Option<isize>,
    },
    /// λ maximizing the center-pair concurrence for each offset, with an exponential fit.
    CriticalLambda {
        #[command(flatten)]
        common: Common,
        /// Offsets j: `a:b` or a comma list.
        #[arg(long)]
        offsets: Option<String>,
    },
    /// Concurrence with the localization center against signed offset, with decay fits.
    DecayProfile {
        #[command(flatten)]
        common: Common,
    },
    /// ⟨C⟩ against time under Crank–Nicolson evolution.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Initial state: delta, w or custom.
        #[arg(long)]
        init: Option<String>,
        /// Site of the delta initial state (default N/2).
        #[arg(long)]
        site: Option<usize>,
        /// CSV with columns `re` and optionally `im`, for `--init custom`.
        #[arg(long)]
        state_file: Option<PathBuf>,
        /// Evolution time (default 400).
        #[arg(long)]
        total_time: Option<f64>,
        /// Time step (default 0.05).
        #[arg(long)]
        dt: Option<f64>,
        /// Steps between recorded samples (default 20).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run the small-lattice invariant suite.
    Selfcheck {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("bad usage")
                .trim_start_matches("error: ");
            return fail(commands::Failure::usage(first));
        }
    };

    let outcome = match cli.command {
        Command::GroundScan { common } => commands::ground_scan(&common),
        Command::NnDist { common } => commands::nn_dist(&common),
        Command::CenterPair { common, offset } => commands::center_pair(&common, offset),
        Command::CriticalLambda { common, offsets } => commands::critical_lambda(&common, offsets),
        Command::DecayProfile { common } => commands::decay_profile(&common),
        Command::Evolve {
            common,
            init,
            site,
            state_file,
            total_time,
            dt,
            stride,
        } => commands::evolve(
            &common,
            commands::EvolveArgs {
                init,
                site,
                state_file,
                total_time,
                dt,
                stride,
            },
        ),
        Command::Selfcheck { output } => commands::selfcheck(output),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: commands::Failure) -> ExitCode {
    let message = f.message.replace('\n', " ");
    eprintln!("error code={} kind={} message={message}", f.code, f.kind);
    ExitCode::from(f.code)
}
