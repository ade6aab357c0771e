//! `sdde`: batch front end for the state-dependent delay equation toolkit.

mod cmd;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::Settings;
use error::CliError;
use output::Writer;

#[derive(Parser, Debug)]
#[command(
    name = "sdde",
    version,
    about = "Bifurcation analysis of u' = alpha u(t) + beta u(t - 1 - u(t - b))"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML scenario file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Integrate from a random smooth history.
    Simulate,
    /// Hopf and zero-root curves and characteristic root scans.
    Stab,
    /// Branch of periodic orbits from a Hopf point.
    Branch,
    /// Two-parameter curves and special points at fixed b.
    Diagram,
    /// Exact center-manifold expansion at the double-zero point.
    Cmf,
    /// Bifurcation sweep of the planar normal form.
    Planar,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Stab => "stab",
            Command::Branch => "branch",
            Command::Diagram => "diagram",
            Command::Cmf => "cmf",
            Command::Planar => "planar",
        }
    }
}

enum Plan {
    Simulate(cmd::simulate::Opts),
    Stab(cmd::stab::Opts),
    Branch(cmd::branch::Opts),
    Diagram(cmd::diagram::Opts),
    Cmf(cmd::cmf::Opts),
    Planar(cmd::planar::Opts),
}

impl Plan {
    fn resolve(c: Command, s: &Settings) -> Result<Self, CliError> {
        Ok(match c {
            Command::Simulate => Plan::Simulate(cmd::simulate::Opts::resolve(s)),
            Command::Stab => Plan::Stab(cmd::stab::Opts::resolve(s)),
            Command::Branch => Plan::Branch(cmd::branch::Opts::resolve(s)?),
            Command::Diagram => Plan::Diagram(cmd::diagram::Opts::resolve(s)),
            Command::Cmf => Plan::Cmf(cmd::cmf::Opts::resolve(s)),
            Command::Planar => Plan::Planar(cmd::planar::Opts::resolve(s)),
        })
    }

    fn options(&self) -> Value {
        match self {
            Plan::Simulate(o) => json!(o),
            Plan::Stab(o) => json!(o),
            Plan::Branch(o) => json!(o),
            Plan::Diagram(o) => json!(o),
            Plan::Cmf(o) => json!(o),
            Plan::Planar(o) => json!(o),
        }
    }

    fn run(&self, w: &mut Writer) -> Result<(), CliError> {
        match self {
            Plan::Simulate(o) => cmd::simulate::run(o, w),
            Plan::Stab(o) => cmd::stab::run(o, w),
            Plan::Branch(o) => cmd::branch::run(o, w),
            Plan::Diagram(o) => cmd::diagram::run(o, w),
            Plan::Cmf(o) => cmd::cmf::run(o, w),
            Plan::Planar(o) => cmd::planar::run(o, w),
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let base = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    let s = base.overlay(&cli.settings);
    s.validate()?;
    Ok(s)
}

fn fail(command: &str, e: &CliError, w: Option<Writer>, options: Value) -> ExitCode {
    let record = e.record(command);
    eprintln!("{record}");
    if let Some(mut w) = w {
        // best effort: the error itself may be an i/o failure
        let _ = w.put_json("error.json", &record);
        let _ = w.finish(command, options, "error");
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let (s, plan) =
        match settings(&cli).and_then(|s| Plan::resolve(cli.command, &s).map(|p| (s, p))) {
            Ok(v) => v,
            Err(e) => return fail(name, &e, None, Value::Null),
        };
    let options =
        json!({ "workers": s.workers.unwrap_or(0), "seed": s.seed, "command": plan.options() });
    let mut w = match Writer::create(&s.out_dir()) {
        Ok(w) => w,
        Err(e) => return fail(name, &e, None, options),
    };
    let workers = s.workers.unwrap_or(0);
    match sdde::par::with_workers(workers, || plan.run(&mut w)) {
        Ok(()) => match w.finish(name, options.clone(), "ok") {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => fail(name, &e, None, options),
        },
        Err(e) => fail(name, &e, Some(w), options),
    }
}
