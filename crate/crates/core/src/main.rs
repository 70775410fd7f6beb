use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use bornspace::numerics::sampling::{threads_from_env, with_workers};
use bornspace::report::{emit_report, parse_config, run_scenario, ScenarioConfig, ScenarioKind};
use bornspace::Result;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Quantum,
    Classical,
    Levelset,
    Correspondence,
    Selftest,
}

impl From<Kind> for ScenarioKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Quantum => ScenarioKind::Quantum,
            Kind::Classical => ScenarioKind::Classical,
            Kind::Levelset => ScenarioKind::Levelset,
            Kind::Correspondence => ScenarioKind::Correspondence,
            Kind::Selftest => ScenarioKind::Selftest,
        }
    }
}

/// Born-rule spectra from quantum eigendensities, classical Koopman modes
/// and level sets, checked against independent oracles.
///
/// Exit status: 0 when every check passes, 2 when a check fails, 1 on a
/// configuration or validation error.
#[derive(Debug, Parser)]
#[command(name = "bornspace", version)]
struct Cli {
    /// Scenario kind; must match the `scenario` field of the config.
    kind: Kind,
    /// Scenario file (JSON). Optional for `selftest`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV spectra and the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print every check, not only failures.
    #[arg(long)]
    verbose: bool,
}

enum Outcome {
    Pass,
    Fail,
}

fn load(cli: &Cli) -> Result<ScenarioConfig> {
    let kind = ScenarioKind::from(cli.kind);
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None if kind == ScenarioKind::Selftest => ScenarioConfig::bare(kind),
        None => return Err(bornspace::Error::schema("--config", format!("required for `{kind}`"))),
    };
    if cfg.scenario != kind {
        return Err(bornspace::Error::schema(
            "scenario",
            format!("config describes `{}` but `{kind}` was requested", cfg.scenario),
        ));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = load(cli)?;
    let report = match threads_from_env()? {
        Some(n) => with_workers(n, || run_scenario(&cfg))??,
        None => run_scenario(&cfg)?,
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("bornspace-out"));
    let written = emit_report(&report, &dir)?;
    for c in &report.checks {
        if cli.verbose || !c.pass {
            eprintln!(
                "{} {}: {:e} (tolerance {:e}; oracle: {})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance,
                c.oracle
            );
        }
    }
    if cli.verbose {
        for path in &written {
            eprintln!("wrote {}", path.display());
        }
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    eprintln!(
        "{}: {passed}/{} checks passed",
        report.provenance.scenario,
        report.checks.len()
    );
    Ok(if report.pass() { Outcome::Pass } else { Outcome::Fail })
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with config errors; 2 means a failed check
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
