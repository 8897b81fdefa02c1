use clap::{Args, Parser, Subcommand};
use nodal_experiments::runner::{write_geometries, write_samples};
use nodal_experiments::{run, ConfigError, ExperimentConfig, RunError, RunOptions, Scenario, SeedRange};
use std::path::PathBuf;
use std::process::ExitCode;

/// Nodal-set experiments: sampling, extraction, census and Kac-Rice checks.
///
/// Exit codes: 0 all checks pass, 1 a check failed or a run error occurred,
/// 2 configuration or ledger error.
#[derive(Parser)]
#[command(name = "nodal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write coefficient sidecars and spec blocks for each seed.
    Sample(Common),
    /// Extract zero sets at the first radius and write geometry files.
    Extract(Common),
    /// Betti-number census across radii.
    Census(Common),
    /// Knot-label census.
    Knots(Common),
    /// Compare extracted measure with Kac-Rice moments.
    Kacrice(Common),
    /// Convergence of the component density.
    Converge(Common),
    /// Nondegeneracy and ergodicity diagnostics.
    Diagnose(Common),
    /// Run the scenario named in the config.
    All(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed range `a..b`; overrides `seeds`.
    #[arg(long)]
    seeds: Option<SeedRange>,
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse completed cells of a matching ledger.
    #[arg(long)]
    resume: bool,
}

impl Common {
    fn load(&self, scenario: Option<Scenario>) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = scenario {
            cfg.scenario = s;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions { threads: self.threads, resume: self.resume }
    }
}

fn scenario_run(common: &Common, scenario: Option<Scenario>) -> Result<bool, RunError> {
    let cfg = common.load(scenario)?;
    let outcome = run(&cfg, &common.options())?;
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!(
        "{}: {} cells computed, {} reused, outputs in {}",
        cfg.scenario.tag(),
        outcome.stats.computed,
        outcome.stats.reused,
        cfg.output_dir.display()
    );
    Ok(outcome.passed())
}

fn files_run(common: &Common, write: fn(&ExperimentConfig) -> Result<Vec<PathBuf>, RunError>) -> Result<bool, RunError> {
    let cfg = common.load(None)?;
    let files = write(&cfg)?;
    println!("wrote {} files to {}", files.len(), cfg.output_dir.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(c) => files_run(c, write_samples),
        Command::Extract(c) => files_run(c, write_geometries),
        Command::Census(c) => scenario_run(c, Some(Scenario::BettiScaling)),
        Command::Knots(c) => scenario_run(c, Some(Scenario::KnotCensus)),
        Command::Kacrice(c) => scenario_run(c, Some(Scenario::KacriceVsEmpirical)),
        Command::Converge(c) => scenario_run(c, Some(Scenario::ConvergeNu)),
        Command::Diagnose(c) => scenario_run(c, Some(Scenario::Diagnostics)),
        Command::All(c) => scenario_run(c, None),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
