use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ncentre_cli::output::{json_document, write_file};
use ncentre_cli::{check, integrals, orbit, parse_config, scatter, RunConfig};

/// Exit status when some atlas words were not realised.
const PARTIAL: u8 = 2;
/// Exit status when a gating check failed.
const CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ncentre",
    version,
    about = "Scattering and periodic orbits of the n-centre problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides output.jobs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomised sampling (overrides output.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Scattering records over the batch grid.
    Scatter,
    /// Orbit classification over the batch grid.
    Classify,
    /// Periodic orbit atlas for the configured words or all classes.
    Orbit,
    /// Entropy table from all word classes up to m_max.
    Entropy,
    /// Bracket and rank diagnostics at sampled scattering states.
    Integrals,
    /// Invariant battery with pass/fail per check.
    Check,
    /// Print the normalised configuration.
    DumpConfig,
}

fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| path.display().to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(j) = common.jobs {
        cfg.output.jobs = j;
    }
    if let Some(s) = common.seed {
        cfg.output.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let cfg = load(&cli.common)?;
    let dir = PathBuf::from(&cfg.output.dir);
    let wrote = |name: &str, text: &str| -> anyhow::Result<()> {
        let path = write_file(&dir, name, text)?;
        println!("wrote {}", path.display());
        Ok(())
    };
    match cli.command {
        Command::DumpConfig => print!("{}", cfg.dump()),
        Command::Scatter => {
            let rows = scatter::scatter_rows(&cfg)?;
            wrote("scatter.csv", &scatter::scatter_csv(&cfg, &rows))?;
        }
        Command::Classify => {
            let rows = scatter::classify_rows(&cfg)?;
            wrote("classify.csv", &scatter::classify_csv(&cfg, &rows))?;
        }
        Command::Orbit => {
            let results = orbit::shoot_words(&cfg)?;
            let atlas = orbit::atlas(&cfg, &results);
            wrote("atlas.json", &json_document("orbit", &cfg, &atlas))?;
            if cfg.symbolic.words.is_empty() {
                let report = orbit::entropy(&cfg, results);
                wrote("entropy.csv", &orbit::entropy_csv(&cfg, &report))?;
            }
            println!("realised {} of {} words", atlas.realized, atlas.attempted);
            if !atlas.complete() {
                return Ok(PARTIAL);
            }
        }
        Command::Entropy => {
            let mut all = cfg.clone();
            all.symbolic.words.clear();
            let results = orbit::shoot_words(&all)?;
            let report = orbit::entropy(&all, results);
            wrote("entropy.json", &json_document("entropy", &all, &report))?;
            wrote("entropy.csv", &orbit::entropy_csv(&all, &report))?;
            println!("h_est {:.6e}", report.h_est);
            if !report.failures.is_empty() {
                return Ok(PARTIAL);
            }
        }
        Command::Integrals => {
            let report = integrals::run(&cfg, cfg.output.seed)?;
            wrote("integrals.json", &json_document("integrals", &cfg, &report))?;
        }
        Command::Check => {
            let report = check::run_check_suite(&cfg, cfg.output.seed)?;
            wrote("check.json", &json_document("check", &cfg, &report))?;
            for c in &report.checks {
                let status = match (c.passed, c.gating) {
                    (true, _) => "pass",
                    (false, true) => "FAIL",
                    (false, false) => "fail (informational)",
                };
                println!(
                    "{:<16} {status:<22} measured {:.3e} tolerance {:.1e}",
                    c.name, c.measured, c.tolerance
                );
            }
            if !report.passed {
                eprintln!("failed checks: {}", report.failed().join(", "));
                return Ok(CHECK_FAILED);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
