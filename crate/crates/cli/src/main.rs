use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hardy_cli::config::Command;
use hardy_cli::scenarios::SCENARIO_NAMES;
use hardy_cli::{run, scenario, CliError, ExperimentConfig};

/// Weighted parabolic p-Laplacian laboratory.
///
/// Config files are TOML with sections [weights], [mesh], [physics], [time],
/// [solver], [io], [initial]. Defaults: grading=2, N=1, p=3, q=4, s=6,
/// m_list=[10,100,1000,10000], lambda_lo=0.5, lambda_hi=1.5,
/// bisection_steps=12, dt=1e-3, T=1, dt_min=1e-30, tol=1e-9,
/// max_iters=20000, seed=0, eps=0, picard_tol=1e-10, picard_max=200,
/// blowup_factor=1e6, output_dir="out", initial = bump of amplitude 1.
#[derive(Parser)]
#[command(name = "hardy", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario instead of a config file.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SCENARIO_NAMES))]
    scenario: Option<String>,
    /// Output directory (overrides io.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides solver.seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Numerical check of the admissibility conditions W1-W6.
    CheckWeights(RunArgs),
    /// First eigenvalue by Rayleigh quotient minimization.
    Eigen(RunArgs),
    /// Truncated eigenvalues over physics.m_list plus the untruncated estimate.
    EigenStudy(RunArgs),
    /// Backward Euler evolution with energy monitoring.
    Evolve(RunArgs),
    /// Bisection for the critical lambda between decay and growth.
    Sweep(RunArgs),
    /// Evolutions for each truncation level in physics.m_list.
    TruncationStudy(RunArgs),
    /// Print the built-in scenarios as TOML.
    Scenarios {
        /// Write `<name>.toml` files into this directory instead.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.category.exit_code() as u8)
}

fn execute(command: Command, args: RunArgs) -> Result<i32, CliError> {
    let (mut cfg, base) = match (&args.config, &args.scenario) {
        (Some(path), _) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (ExperimentConfig::load(path)?, base)
        }
        (None, Some(name)) => (scenario(name).expect("clap restricts names"), PathBuf::from(".")),
        (None, None) => unreachable!("clap requires one of --config/--scenario"),
    };
    cfg.command = command;
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    let out = args.out.unwrap_or_else(|| base.join(&cfg.io.output_dir));
    let outcome = run(&cfg, &base, &out)?;
    println!("{}", serde_json::to_string(&outcome.report.headline).expect("headline serializes"));
    eprintln!("{}: {} (artifacts in {})", command.name(), outcome.report.status, outcome.out_dir.display());
    Ok(outcome.exit_code)
}

fn write_scenarios(dir: Option<&Path>) -> Result<(), CliError> {
    for s in hardy_cli::builtin_scenarios() {
        let name = s.name.clone().unwrap_or_default();
        let text = s.to_toml()?;
        match dir {
            Some(dir) => std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join(format!("{name}.toml")), text))
                .map_err(CliError::precondition)?,
            None => println!("# {name}\n{text}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::CheckWeights(a) => (Command::CheckWeights, a),
        Cmd::Eigen(a) => (Command::Eigen, a),
        Cmd::EigenStudy(a) => (Command::EigenStudy, a),
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::TruncationStudy(a) => (Command::TruncationStudy, a),
        Cmd::Scenarios { write } => {
            return match write_scenarios(write.as_deref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            };
        }
    };
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(e),
    }
}
