//! Byte-stable CSV and JSON output.
//!
//! Floats are written with Rust's shortest round-trip formatting and maps are
//! ordered, so the same report always renders to the same bytes. Nothing
//! time- or host-dependent is written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CheckRecord, Provenance, RunReport};
use crate::error::{Error, Result};
use crate::spectrum::BornSpectrum;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub name: String,
    pub contents: String,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    scenario: &'a str,
    pass: bool,
    checks: &'a [CheckRecord],
    metrics: &'a BTreeMap<String, f64>,
    spectra: Vec<String>,
    provenance: &'a Provenance,
}

fn spectrum_csv(report: &RunReport, spectrum: &BornSpectrum) -> String {
    let prov = &report.provenance;
    let mut out = String::new();
    let _ = writeln!(out, "# scenario: {}", prov.scenario);
    let _ = writeln!(out, "# kind: {}", prov.kind);
    let _ = writeln!(out, "# pipeline: {}", spectrum.source.slug());
    let _ = writeln!(out, "# seed: {}", prov.seed);
    let _ = writeln!(out, "# hbar: {}", prov.hbar);
    let _ = writeln!(out, "# version: {}", prov.version);
    let _ = writeln!(out, "# degeneracies_summed: {}", spectrum.degeneracies_summed);
    let n = spectrum.labels.len();
    let header: Vec<String> = if n == 1 && spectrum.labels[0] == "K_N" {
        vec!["K_N".into()]
    } else {
        BornSpectrum::indexed_labels(n)
    };
    if header != spectrum.labels {
        let _ = writeln!(out, "# labels: {}", spectrum.labels.join(","));
    }
    let _ = writeln!(out, "{},width,density,probability", header.join(","));
    for row in &spectrum.rows {
        for v in &row.values {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{},{}", row.width, row.density(), row.probability);
    }
    out
}

/// All files of a report, in a fixed order: spectra then the JSON report.
pub fn render_report(report: &RunReport) -> Result<Vec<RenderedFile>> {
    let names = report.spectrum_files();
    let mut files: Vec<RenderedFile> = names
        .iter()
        .zip(&report.spectra)
        .map(|(name, s)| RenderedFile {
            name: name.clone(),
            contents: spectrum_csv(report, s),
        })
        .collect();
    let json = ReportJson {
        scenario: &report.provenance.scenario,
        pass: report.pass(),
        checks: &report.checks,
        metrics: &report.metrics,
        spectra: names,
        provenance: &report.provenance,
    };
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::WriteFailure {
        path: report.report_file(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    files.push(RenderedFile {
        name: report.report_file(),
        contents: text,
    });
    Ok(files)
}

/// Writes every rendered file into `dir`, creating it if needed. Returns the
/// written paths.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::WriteFailure {
        path: dir.display().to_string(),
        reason: e.to_string(),
    })?;
    render_report(report)?
        .into_iter()
        .map(|f| {
            let path = dir.join(&f.name);
            std::fs::write(&path, f.contents).map_err(|e| Error::WriteFailure {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{ScenarioConfig, ScenarioKind};
    use crate::spectrum::{Pipeline, SpectrumRow};

    fn empty() -> RunReport {
        RunReport::new(Provenance::from_config(&ScenarioConfig::bare(ScenarioKind::Selftest)))
    }

    fn table(source: Pipeline) -> BornSpectrum {
        BornSpectrum::new(
            source,
            BornSpectrum::indexed_labels(1),
            vec![
                SpectrumRow { values: vec![0.25], width: 0.5, probability: 0.75 },
                SpectrumRow { values: vec![0.75], width: 0.5, probability: 0.25 },
            ],
        )
    }

    #[test]
    fn empty_report_passes() {
        let r = empty();
        assert!(r.pass());
        let files = render_report(&r).unwrap();
        assert_eq!(files.len(), 1);
        let v: serde_json::Value = serde_json::from_str(&files[0].contents).unwrap();
        assert_eq!(v["checks"], serde_json::json!([]));
        assert_eq!(v["pass"], serde_json::json!(true));
        assert_eq!(v["provenance"]["hbar_defaulted"], serde_json::json!(true));
    }

    #[test]
    fn two_spectra_two_csv_files() {
        let mut r = empty();
        r.spectra.push(table(Pipeline::ClassicalKoopman));
        r.spectra.push(table(Pipeline::MonteCarlo));
        let files = render_report(&r).unwrap();
        let names: Vec<&str> = files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["selftest_koopman.csv", "selftest_montecarlo.csv", "selftest_report.json"]);
        let csv = &files[0].contents;
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, ["K_1,width,density,probability", "0.25,0.5,1.5,0.75", "0.75,0.5,0.5,0.25"]);
    }

    #[test]
    fn failing_check_fails_report() {
        let mut r = empty();
        r.check("a", 1e-13, 1e-12, "exact");
        assert!(r.pass());
        r.check("b", 2.0, 1.0, "exact");
        r.check("c", f64::NAN, 1.0, "exact");
        assert!(!r.pass());
        assert_eq!(r.failures().count(), 2);
    }

    #[test]
    fn emit_is_byte_stable() {
        let mut r = empty();
        r.spectra.push(table(Pipeline::Analytic));
        r.check("x", 0.1, 0.2, "exact");
        r.metric("mean", 1.0 / 3.0);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = emit_report(&r, a.path()).unwrap();
        let pb = emit_report(&r, b.path()).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        assert!(matches!(emit_report(&empty(), &file.join("sub")), Err(Error::WriteFailure { .. })));
    }
}
