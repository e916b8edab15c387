//! `ineqlab` command-line harness. Every subcommand writes JSON reports
//! (plus CSV tables with `--format csv`) and a `manifest.json` into
//! `--out-dir`.
//!
//! Exit codes: 0 all checks pass, 1 a checked inequality fails beyond slack,
//! 2 bad configuration, 3 numerical failure.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod chaos;
mod constants;
mod input;
mod moments;
mod output;
mod poisson;
mod zoo;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use ineqlab::ExecMode;
use serde_json::{json, Value};

use output::{CliResult, Format, Output};

#[derive(Parser)]
#[command(name = "ineqlab", version, about = "Verify functional inequalities and moment bounds on finite models")]
struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Relative slack for estimated-constant comparisons.
    #[arg(long, global = true, default_value_t = 0.01)]
    slack: f64,
    /// Execution mode for the data-parallel loops. Results do not depend on it.
    #[arg(long, global = true, value_enum, default_value_t = Exec::Parallel)]
    exec: Exec,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Exec {
    Sequential,
    Parallel,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate optimal constants of a model and verify the predicted relations.
    Constants(constants::Args),
    /// Check moment inequalities for a function on a model.
    Moments(moments::Args),
    /// Partition norms, chaos moment bounds and tail bounds.
    #[command(subcommand)]
    Chaos(chaos::Command),
    /// Poisson point process checks.
    #[command(subcommand)]
    Poisson(poisson::Command),
    /// List or build the built-in models.
    #[command(subcommand)]
    Zoo(zoo::Command),
}

/// Shared state handed to every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub slack: f64,
    pub exec: ExecMode,
    pub out: Output,
}

/// What a subcommand hands back: its resolved configuration and whether all
/// checks passed.
pub struct Outcome {
    pub config: Value,
    pub passed: bool,
    pub summary: String,
}

fn dispatch(cli: Cli) -> CliResult<bool> {
    if !(cli.slack >= 0.0) || !cli.slack.is_finite() {
        return Err(output::CliError::config(format!("--slack must be a nonnegative number, got {}", cli.slack)));
    }
    let mut ctx = Ctx {
        seed: cli.seed,
        slack: cli.slack,
        exec: match cli.exec {
            Exec::Sequential => ExecMode::Sequential,
            Exec::Parallel => ExecMode::Parallel,
        },
        out: Output::new(&cli.out_dir, cli.format)?,
    };
    let (name, outcome) = match &cli.command {
        Command::Constants(a) => ("constants".to_string(), constants::run(a, &mut ctx)?),
        Command::Moments(a) => ("moments".to_string(), moments::run(a, &mut ctx)?),
        Command::Chaos(c) => (format!("chaos {}", c.name()), chaos::run(c, &mut ctx)?),
        Command::Poisson(c) => (format!("poisson {}", c.name()), poisson::run(c, &mut ctx)?),
        Command::Zoo(c) => (format!("zoo {}", c.name()), zoo::run(c, &mut ctx)?),
    };
    let config = json!({
        "command": name,
        "seed": cli.seed,
        "slack": cli.slack,
        "args": outcome.config,
    });
    let dir = ctx.out.dir().display().to_string();
    ctx.out.finish(&name, cli.seed, &config, outcome.passed)?;
    println!("{}: {}", name, outcome.summary);
    println!("{}: {} (reports in {dir})", name, if outcome.passed { "PASS" } else { "FAIL" });
    Ok(outcome.passed)
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
