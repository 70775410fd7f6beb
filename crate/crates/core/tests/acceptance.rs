//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any line fails. Run with `cargo test --test acceptance -- --nocapture`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bornspace::report::CheckRecord;
use bornspace::selftest::criteria;

const SEED: u64 = 20240229;

fn line(c: &CheckRecord) -> String {
    format!(
        "{} {:<42} {:>12.3e} <= {:<8.1e} [{}]",
        if c.pass { "PASS" } else { "FAIL" },
        c.name,
        c.value,
        c.tolerance,
        c.oracle
    )
}

fn timing(name: &str, elapsed: Duration, limit: Duration) -> CheckRecord {
    CheckRecord::at_most(name, elapsed.as_secs_f64(), limit.as_secs_f64(), "wall clock, seconds")
}

const SCENARIO: &str = r#"{"scenario": "levelset", "name": "quartic", "seed": 11,
    "system": {"kind": "quartic", "mass": 1.0, "coupling": 1.0},
    "state": {"kind": "gaussian", "p0": [0.0], "q0": [0.0], "sigma_p": [1.0], "sigma_q": [0.5]},
    "grid": [{"min": 0.0, "max": 16.0, "bins": 64}]}"#;

/// Runs the binary on one config under the given worker count and returns
/// the produced files, sorted by name.
fn cli_outputs(config: &Path, out: &Path, threads: &str) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_bornspace"))
        .args(["levelset", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("BORNSPACE_THREADS", threads)
        .status()
        .expect("binary runs");
    assert_eq!(status.code(), Some(0));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn cli_determinism() -> CheckRecord {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("quartic.json");
    std::fs::write(&config, SCENARIO).unwrap();
    let runs: Vec<_> = [("a", "1"), ("b", "4"), ("c", "4")]
        .iter()
        .map(|(sub, threads)| cli_outputs(&config, &dir.path().join(sub), threads))
        .collect();
    let differing = runs[1..]
        .iter()
        .map(|r| if r == &runs[0] { 0 } else { 1 })
        .sum::<usize>();
    CheckRecord::at_most(
        "determinism_cli_threads",
        differing as f64,
        0.0,
        format!("{} output files byte-compared across BORNSPACE_THREADS = 1, 4, 4", runs[0].len()),
    )
}

#[test]
fn acceptance() {
    let suite = Instant::now();
    let mut records = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let checks = (c.run)(SEED).unwrap_or_else(|e| panic!("{} errored: {e}", c.name));
        let elapsed = start.elapsed();
        for r in &checks {
            println!("{}", line(r));
        }
        records.extend(checks);
        if c.name == "quantum_born_equivalence" {
            let t = timing("quantum_born_runtime", elapsed, Duration::from_secs(10));
            println!("{}", line(&t));
            records.push(t);
        }
    }
    let d = cli_determinism();
    println!("{}", line(&d));
    records.push(d);
    let t = timing("suite_runtime", suite.elapsed(), Duration::from_secs(300));
    println!("{}", line(&t));
    records.push(t);

    let failed: Vec<&str> = records.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    println!("{} of {} criteria passed", records.len() - failed.len(), records.len());
    assert!(failed.is_empty(), "failed: {failed:?}");
}
