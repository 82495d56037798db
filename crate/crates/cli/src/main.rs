use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hullswarm_cli::config::{resolve, DEFAULT_EPS, DEFAULT_OUT};
use hullswarm_cli::{Check, ConfigFile, ParamsDoc, RunConfig};

/// Simulate leader-follower swarms on switching graphs and check the
/// convergence certificates.
#[derive(Parser)]
#[command(name = "hullswarm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario, write its output files and run the checks.
    Run(RunArgs),
    /// Write a generated scenario as TOML.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Seed of the generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of followers.
    #[arg(long)]
    n: Option<usize>,
    /// Number of leaders.
    #[arg(long)]
    k: Option<usize>,
    /// State dimension.
    #[arg(long)]
    d: Option<usize>,
}

impl GenArgs {
    fn merge(&self, mut p: ParamsDoc) -> ParamsDoc {
        p.seed = self.seed.or(p.seed);
        p.n = self.n.or(p.n);
        p.k = self.k.or(p.k);
        p.d = self.d.or(p.d);
        p
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name (ujlc, counterexample, jlc-bidirectional, jlc-acyclic,
    /// jlc-broken, jlc-broken-acyclic, suite) or a scenario TOML file.
    #[arg(long)]
    scenario: Option<String>,
    /// TOML config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Check to run; repeatable.
    #[arg(long = "check", value_enum)]
    checks: Vec<Check>,
    /// Distance threshold of the tracking check.
    #[arg(long)]
    eps: Option<f64>,
    /// Output directory; defaults to $HULLSWARM_OUT, then `hullswarm-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot.svg.
    #[arg(long)]
    plot: bool,
    /// Run these scenarios concurrently, each into its own subdirectory.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    batch: Vec<String>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Generator name.
    #[arg(long)]
    scenario: String,
    /// Horizon passed to the generator.
    #[arg(long)]
    horizon: Option<f64>,
    /// Destination file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

fn merge(args: RunArgs) -> anyhow::Result<RunConfig> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let out = args
        .out
        .or(file.out)
        .or_else(|| std::env::var_os("HULLSWARM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(RunConfig {
        scenario: args.scenario.or(file.scenario).unwrap_or_else(|| "ujlc".into()),
        batch: if args.batch.is_empty() { file.batch } else { args.batch },
        params: args.gen.merge(file.params),
        dt: args.dt.or(file.dt),
        horizon: args.horizon.or(file.horizon),
        checks: if args.checks.is_empty() {
            file.checks.unwrap_or_default()
        } else {
            args.checks
        },
        eps: args.eps.or(file.eps).unwrap_or(DEFAULT_EPS),
        out,
        plot: args.plot || file.plot.unwrap_or(false),
    })
}

fn write_scenario(args: ScenarioArgs) -> anyhow::Result<()> {
    let params = args.gen.merge(ParamsDoc::default());
    let list = resolve(&args.scenario, &params, args.horizon)?;
    let text: String = list.iter().map(|r| r.scenario.to_toml()).collect::<Vec<_>>().join("\n");
    match args.out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Run(args) => match merge(args) {
            Ok(cfg) => hullswarm_cli::run(&cfg),
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
        Command::Scenario(args) => match write_scenario(args) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                1
            }
        },
    };
    ExitCode::from(code as u8)
}
