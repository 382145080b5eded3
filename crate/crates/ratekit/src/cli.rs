//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Run};
use crate::scenario::Scenario;
use crate::{builtins, diag, CliError};

#[derive(Debug, Parser)]
#[command(name = "ratekit", version, about = "Rate-induced tipping analysis for nonautonomous ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario and print the resolved configuration.
    Validate(CommonArgs),
    /// δ-close and end-point tracking at rates.r.
    Track(CommonArgs),
    /// Threshold-instability scan along the input.
    Scan(CommonArgs),
    /// Critical rates by outcome bisection.
    FindRc(CommonArgs),
    /// Critical rates plus reversible / irreversible classification.
    Classify(CommonArgs),
    /// Build an input that tips at the given rate from a scan pair.
    ConstructInput(CommonArgs),
    /// Critical rates over the sweep grid.
    Diagram(CommonArgs),
    /// List the builtin scenarios.
    Builtins,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file, or builtin:NAME.
    pub scenario: String,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads for diagram (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Exit with status 4 when no critical rate is found.
    #[arg(long)]
    pub expect_tipping: bool,
    /// Overrides numerics.alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Overrides rates.tol_r.
    #[arg(long)]
    pub tol_r: Option<f64>,
    /// Overrides numerics.seed_delta.
    #[arg(long)]
    pub seed_delta: Option<f64>,
}

impl CommonArgs {
    /// The scenario with command-line overrides applied.
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let mut s = match self.scenario.strip_prefix("builtin:") {
            Some(name) => builtins::builtin(name)?,
            None => {
                let text = std::fs::read_to_string(&self.scenario).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", self.scenario)))?;
                Scenario::from_json(&text)?
            }
        };
        if let Some(a) = self.alpha {
            s.numerics.alpha = Some(a);
        }
        if let Some(t) = self.tol_r {
            s.rates.tol_r = t;
        }
        if let Some(d) = self.seed_delta {
            s.numerics.seed_delta = Some(d);
        }
        if self.jobs == Some(0) {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        s.validate()?;
        Ok(s)
    }
}

/// Runs one command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Builtins => {
            for name in builtins::names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Validate(a) => a.resolve().and_then(|s| commands::validate(&s)).map(|v| {
            println!("{}", serde_json::to_string_pretty(&v).expect("JSON values print"));
        }),
        Command::Track(a)
        | Command::Scan(a)
        | Command::FindRc(a)
        | Command::Classify(a)
        | Command::ConstructInput(a)
        | Command::Diagram(a) => a.resolve().and_then(|s| {
            let run = Run { scenario: &s, out: &a.out, expect_tipping: a.expect_tipping };
            diag::info("start", serde_json::json!({ "scenario": s.name, "out": a.out.display().to_string() }));
            match &cli.command {
                Command::Track(_) => commands::track(&run),
                Command::Scan(_) => commands::scan(&run),
                Command::FindRc(_) => commands::find_rc(&run),
                Command::Classify(_) => commands::classify(&run),
                Command::ConstructInput(_) => commands::construct_input(&run),
                _ => commands::diagram(&run, a.jobs),
            }
            .map(|_| ())
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            diag::error(&e);
            e.exit_code()
        }
    }
}
