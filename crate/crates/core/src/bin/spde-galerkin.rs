use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_spde::harness::{run, Overrides};

/// Spectral-Galerkin simulation and verification runs.
///
/// Exit codes: 0 ok, 1 I/O or other failure, 2 configuration error,
/// 3 solver explosion, 4 assumption or bound violation.
#[derive(Parser)]
#[command(name = "spde-galerkin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task given in the config (simulate when none is given).
    Run(Common),
    /// Check the structural assumptions on sampled fields.
    Check(Common),
    /// Monte Carlo moment estimates.
    Moments(Common),
    /// Oracle sweep over (γ², p) for the fractional-noise model.
    Sharpness(Common),
    /// Strong convergence rate against the exact mode solution.
    Convergence(Common),
    /// Weighted-difference monitor for two perturbed solutions.
    UniqueMonitor(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML or JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory [default: $SPDE_GALERKIN_OUT/<config stem>, else ./spde-runs/<config stem>]
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Path count (sample count for `check`).
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::Run(a) => (None, a),
        Command::Check(a) => (Some("check"), a),
        Command::Moments(a) => (Some("moments"), a),
        Command::Sharpness(a) => (Some("sharpness"), a),
        Command::Convergence(a) => (Some("convergence"), a),
        Command::UniqueMonitor(a) => (Some("unique-monitor"), a),
    };
    let out = args.out.clone().unwrap_or_else(|| {
        let root = std::env::var_os("SPDE_GALERKIN_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("spde-runs"));
        let stem = args.config.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into());
        root.join(stem)
    });
    let overrides = Overrides {
        seed: args.seed,
        paths: args.paths,
        task: task.map(str::to_string),
    };
    match run(&args.config, &out, &overrides) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            if !args.quiet {
                println!("task {} -> {}", m.task, outcome.out_dir.display());
                for (k, v) in &m.summary {
                    println!("  {k}: {v}");
                }
                println!("status: {:?} (exit {})", m.status, m.exit_code);
            }
            ExitCode::from(m.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
