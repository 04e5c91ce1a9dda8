mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slmc_core::cauchy::Scheme;
use slmc_core::payoff::PayoffSpec;
use slmc_core::{ErrorCategory, Result};

use config::{Overrides, RunConfig};
use output::Outputs;

/// Strict local martingale diffusions: classification, basic solutions,
/// Cauchy problems and Monte Carlo cross-checks.
#[derive(Parser)]
#[command(name = "slmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the model and report both integral audits.
    Classify(Common),
    /// Basic solutions φ↑, φ↓ and Φ on the grid, plus a growth report.
    Phi(Common),
    /// Solve the Cauchy problem through the Φ-transform.
    Solve(Common),
    /// Defect surface w(t, x) on a strict side.
    Defect(Common),
    /// Monte Carlo estimate of E^x[H(X_T)].
    Mc(Common),
    /// Tabulate h(t, x)/x near the truncation edges.
    BoundaryLayer(Common),
    /// Raw Dirichlet solve against the transformed solve.
    DemoNonuniqueness(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run config, or a manifest emitted by an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: $SLMC_OUT, else ./slmc-out]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "T", value_name = "T")]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid_left: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid_right: Option<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    /// identity, abs, constant:<c> or call:<strike>
    #[arg(long)]
    payoff: Option<PayoffSpec>,
    /// rannacher, crank_nicolson or implicit_euler
    #[arg(long)]
    scheme: Option<Scheme>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            lambda: self.lambda,
            t: self.t,
            grid_left: self.grid_left,
            grid_right: self.grid_right,
            grid_n: self.grid_n,
            steps: self.steps,
            paths: self.paths,
            payoff: self.payoff.clone(),
            scheme: self.scheme,
            seed: self.seed,
        }
    }
}

type Handler = fn(&RunConfig, &mut Outputs) -> Result<serde_json::Value>;

fn run(name: &str, common: Common, handler: Handler) -> Result<()> {
    let mut cfg = RunConfig::load(&common.config)?;
    cfg.apply(&common.overrides());
    cfg.validate()?;
    let mut out = Outputs::new(output::resolve_dir(common.out), &cfg)?;
    let details = handler(&cfg, &mut out)?;
    let manifest = out.finish(name, &cfg, details)?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Config => 1,
        ErrorCategory::Inconclusive => 2,
        ErrorCategory::Truncation => 3,
        ErrorCategory::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (name, common, handler): (&str, Common, Handler) = match cli.command {
        Command::Classify(c) => ("classify", c, commands::classify),
        Command::Phi(c) => ("phi", c, commands::phi),
        Command::Solve(c) => ("solve", c, commands::solve),
        Command::Defect(c) => ("defect", c, commands::defect),
        Command::Mc(c) => ("mc", c, commands::mc),
        Command::BoundaryLayer(c) => ("boundary-layer", c, commands::boundary_layer),
        Command::DemoNonuniqueness(c) => ("demo-nonuniqueness", c, commands::demo_nonuniqueness),
    };
    match run(name, common, handler) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.category()))
        }
    }
}
