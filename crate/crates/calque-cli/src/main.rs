use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use calque_cli::{run, Command, RunConfig};

/// Surrogate-comparison solver toolkit.
#[derive(Parser)]
#[command(name = "calque", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON problem file.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for reports, traces, and solutions.
    #[arg(long)]
    out: PathBuf,
    /// Seed for every sampled quantity in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dotted-path override, e.g. --set solver.tol=1e-8 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the structural constants and emit a pass/fail certificate.
    Certify(Common),
    /// Run the comparison iteration against a target.
    Solve(Common),
    /// Solve x - f1(x) = y by the fixed-point specialization.
    FixedPoint(Common),
    /// Build and solve a quasilinear elliptic problem.
    Elliptic(Common),
    /// Verify the flow conditions and solve the steady Galerkin system.
    NsSteady(Common),
    /// March the Galerkin system by implicit Euler steps.
    NsEvolve(Common),
    /// Certify and solve across a list of ball radii.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Certify(c) => (Command::Certify, c),
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::FixedPoint(c) => (Command::FixedPoint, c),
        Cmd::Elliptic(c) => (Command::Elliptic, c),
        Cmd::NsSteady(c) => (Command::NsSteady, c),
        Cmd::NsEvolve(c) => (Command::NsEvolve, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    };
    let code = run(&RunConfig {
        command,
        input_path: common.input,
        output_dir: common.out,
        seed: common.seed,
        overrides: common.set,
    });
    ExitCode::from(code as u8)
}
