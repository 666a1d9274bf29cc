//! `vbi`: run vehicle-bridge interaction scenarios, the built-in benchmarks,
//! road-profile synthesis and the parametric sweeps.

mod commands;
mod failure;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vbi_core::coupling::{AnalysisMode, ScenarioConfig};

#[derive(Parser)]
#[command(name = "vbi", version, about = "Vehicle-bridge interaction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Solver and mesh overrides applied on top of a scenario.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Coupling tolerance on the relative bridge-displacement change
    #[arg(long)]
    pub tol: Option<f64>,
    /// Time step [s]
    #[arg(long)]
    pub dt: Option<f64>,
    /// Master seed; roughness uses it directly, traffic uses seed + 1
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of beam elements
    #[arg(long)]
    pub ne: Option<usize>,
    /// Cubic Hermitian interpolation of the deck under each axle
    #[arg(long)]
    pub hermitian_interp: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(tol) = self.tol {
            cfg.solver.tol = tol;
        }
        if let Some(dt) = self.dt {
            cfg.solver.dt = dt;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(ne) = self.ne {
            cfg.bridge.num_elements = ne;
        }
        if self.hermitian_interp {
            cfg.solver.hermitian_interp = true;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML file
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(AnalysisMode))]
        mode: Option<AnalysisMode>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a built-in benchmark in both modes and compare them
    Benchmark {
        /// yang2004, yang2019, nube_v1, nube_v2 or eshkevari_<span>_<commercial|heavy>
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Synthesise an ISO 8608 profile and check its spectrum
    Roughness(commands::RoughnessArgs),
    /// Run a parametric study (span, speed, roughness or traffic)
    Sweep {
        study: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, mode, overrides } => commands::run(&config, &out, mode, &overrides),
        Command::Benchmark { name, out, overrides } => commands::benchmark(&name, &out, &overrides),
        Command::Roughness(args) => commands::roughness(&args),
        Command::Sweep { study, out, dt, tol, seed } => commands::sweep(&study, &out, dt, tol, seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vbi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
