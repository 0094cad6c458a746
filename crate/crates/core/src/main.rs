use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use alap::config::RunConfig;
use alap::harness::{error_exit_code, run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "alap", version, about = "Free boundary problems for the A-Laplacian: solver and certification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled checks (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Run the configured resolutions concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the penalized problem at every configured resolution.
    Solve(Common),
    /// Ellipticity and monotonicity checks of the profile(s).
    CheckProfile(Common),
    /// Radial, Hopf and boundary barrier certification.
    CheckBarriers(Common),
    /// Characteristic orbits and Jacobian checks.
    Trace(Common),
    /// Free-boundary graphs `φ_h` as CSV.
    ExtractFb {
        #[command(flatten)]
        common: Common,
        /// Level(s) `h` (overrides the configured levels).
        #[arg(long = "h")]
        h: Vec<f64>,
    },
    /// χ-monotonicity, propagation, level-set identity and lsc checks.
    VerifyFb(Common),
    /// Interior linear growth near the free boundary.
    Growth(Common),
    /// Linear growth near the Dirichlet part T.
    BoundaryGrowth(Common),
    /// Measured Harnack constants.
    Harnack(Common),
    /// Lipschitz rescaling check.
    Rescale(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, levels) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c, None),
        Cmd::CheckProfile(c) => (Command::CheckProfile, c, None),
        Cmd::CheckBarriers(c) => (Command::CheckBarriers, c, None),
        Cmd::Trace(c) => (Command::Trace, c, None),
        Cmd::ExtractFb { common, h } => (Command::ExtractFb, common, (!h.is_empty()).then_some(h)),
        Cmd::VerifyFb(c) => (Command::VerifyFb, c, None),
        Cmd::Growth(c) => (Command::Growth, c, None),
        Cmd::BoundaryGrowth(c) => (Command::BoundaryGrowth, c, None),
        Cmd::Harnack(c) => (Command::Harnack, c, None),
        Cmd::Rescale(c) => (Command::Rescale, c, None),
    };
    let cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(error_exit_code(&e) as u8);
        }
    };
    let mut opts = RunOptions::from_config(&cfg);
    if let Some(out) = common.out {
        opts.out = out;
    }
    if let Some(seed) = common.seed {
        opts.seed = seed;
    }
    opts.parallel = common.parallel;
    opts.levels = levels;
    match run(command, &cfg, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
