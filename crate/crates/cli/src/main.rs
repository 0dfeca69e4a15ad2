use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nehari_cli::{run, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "nehari", version, about = "Degenerate logistic equation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replaces `problem.lambda`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Dirichlet spectra of Ω and Ω₀ and the regime of λ.
    Spectrum,
    /// Positive equilibrium, or the nonexistence probe above λ₁(Ω₀).
    Stationary,
    /// Sign-changing solution by path deformation.
    MountainPass,
    /// Parabolic trajectory from a preset initial state.
    Evolve,
    /// Stable-direction probe at the stored mountain-pass solution.
    Probe,
    /// Stationary outcomes over a list of λ.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Spectrum => Command::Spectrum,
        Sub::Stationary => Command::Stationary,
        Sub::MountainPass => Command::MountainPass,
        Sub::Evolve => Command::Evolve,
        Sub::Probe => Command::Probe,
        Sub::Sweep => Command::Sweep,
    };
    let o = Overrides { out: cli.common.out, seed: cli.common.seed, lambda: cli.common.lambda };
    let result = cli
        .common
        .config
        .as_deref()
        .map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
        .and_then(|c| c.with_overrides(&o))
        .and_then(|c| run(command, &c));
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("manifest: {} ({})", report.manifest.command, report.manifest.config_hash);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
