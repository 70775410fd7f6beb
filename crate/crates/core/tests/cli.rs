use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bornspace"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const QUBIT: &str = r#"{"scenario": "quantum", "name": "qubit",
    "system": {"kind": "matrices", "observables": [{"label": "Z", "diagonal": [1.0, -1.0]}]},
    "state": {"kind": "pure", "vector": [[0.6, 0.0], [0.0, 0.8]]}}"#;

const THERMAL: &str = r#"{"scenario": "classical", "name": "thermal", "seed": 5, "samples": 100000,
    "system": {"kind": "harmonic", "oscillators": [{"mass": 1.0, "omega": 1.0}]},
    "state": {"kind": "thermal", "temperature": 1.0},
    "grid": [{"min": 0.0, "max": 16.0, "bins": 64}]TOL}"#;

#[test]
fn passing_quantum_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "q.json", QUBIT);
    let out = run(&["quantum", "--config", "q.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/qubit_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["provenance"]["hbar"], 1.0);
    assert_eq!(report["provenance"]["hbar_defaulted"], true);
    assert_eq!(report["spectra"], serde_json::json!(["qubit_eigendensity.csv", "qubit_direct.csv"]));
    for check in report["checks"].as_array().unwrap() {
        assert!(check["oracle"].as_str().is_some_and(|s| !s.is_empty()));
        assert!(check["tolerance"].as_f64().is_some_and(|t| t > 0.0));
    }
    let csv = std::fs::read_to_string(dir.path().join("o/qubit_direct.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "K_1,width,density,probability");
    assert_eq!(rows.len(), 3);
}

#[test]
fn non_commuting_pair_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "nc.json",
        r#"{"scenario": "quantum",
            "system": {"kind": "matrices", "observables": [
                {"label": "X", "dim": 2, "matrix": [[0, 0], [1, 0], [1, 0], [0, 0]]},
                {"label": "Z", "diagonal": [1.0, -1.0]}]},
            "state": {"kind": "random"}}"#,
    );
    let out = run(&["quantum", "--config", "nc.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("do not commute"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "neg.json", &THERMAL.replace("TOL", r#", "tolerances": {"born_equivalence": -1}"#));
    let out = run(&["classical", "--config", "neg.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerances.born_equivalence"));

    let out = run(&["classical", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["classical"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["sideways"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    // kind on the command line must match the file
    write(dir.path(), "q.json", QUBIT);
    let out = run(&["classical", "--config", "q.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tight.json", &THERMAL.replace("TOL", r#", "tolerances": {"total_variation": 1e-9}"#));
    let out = run(&["classical", "--config", "tight.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL monte_carlo_tv"));
    // the report is still written
    let report = std::fs::read_to_string(dir.path().join("o/thermal_report.json")).unwrap();
    assert!(report.contains("\"pass\": false"));
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.json", &THERMAL.replace("TOL", ""));
    for sub in ["a", "b"] {
        let out = run(&["classical", "--config", "t.json", "--out", sub], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let out = run(&["classical", "--config", "t.json", "--out", "c", "--seed", "6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    for name in ["thermal_koopman.csv", "thermal_marginal.csv", "thermal_montecarlo.csv", "thermal_report.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let a = std::fs::read(dir.path().join("a/thermal_montecarlo.csv")).unwrap();
    let c = std::fs::read(dir.path().join("c/thermal_montecarlo.csv")).unwrap();
    assert_ne!(a, c);
    // the deterministic pipelines do not depend on the seed beyond the header
    let strip = |b: Vec<u8>| -> Vec<String> {
        String::from_utf8(b).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
    };
    assert_eq!(
        strip(std::fs::read(dir.path().join("a/thermal_koopman.csv")).unwrap()),
        strip(std::fs::read(dir.path().join("c/thermal_koopman.csv")).unwrap())
    );
}

#[test]
fn correspondence_scenario() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"scenario": "correspondence", "name": "coherent",
            "system": {"kind": "harmonic", "oscillators": [{"mass": 1.0, "omega": 1.0}]},
            "state": {"kind": "coherent", "n_bar": 20}}"#,
    );
    let out = run(&["correspondence", "--config", "c.json", "--out", "o", "--verbose"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/coherent_report.json")).unwrap()).unwrap();
    let gap = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "relative_mean_difference")
        .unwrap();
    assert!(gap["value"].as_f64().unwrap() <= 0.05);
    assert!((report["metrics"]["quantum_mean"].as_f64().unwrap() - 20.5).abs() < 1e-9);
    assert!(dir.path().join("o/coherent_eigendensity.csv").is_file());
    assert!(dir.path().join("o/coherent_koopman.csv").is_file());
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "q.json", QUBIT);
    let out = Command::new(env!("CARGO_BIN_EXE_bornspace"))
        .args(["quantum", "--config", "q.json", "--out", "o"])
        .current_dir(dir.path())
        .env("BORNSPACE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BORNSPACE_THREADS"));
}
