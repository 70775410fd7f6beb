//! Scenario configs, runs, and the CSV/JSON artifacts they leave behind.

pub mod config;
pub mod correspondence;
pub mod emit;
pub mod run;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::spectrum::BornSpectrum;

pub use config::{parse_config, ScenarioConfig, ScenarioKind};
pub use correspondence::{correspondence_demo, CorrespondenceOutcome, CorrespondenceParams};
pub use emit::{emit_report, render_report, RenderedFile};
pub use run::run_scenario;

/// One numeric claim: `value <= tolerance`, checked against `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub oracle: String,
    pub pass: bool,
}

impl CheckRecord {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64, oracle: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            oracle: oracle.into(),
            pass: value.is_finite() && value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub version: String,
    pub seed: u64,
    pub hbar: f64,
    pub hbar_defaulted: bool,
    /// Bin count per grid axis.
    pub grid: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl Provenance {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            scenario: cfg.name(),
            kind: cfg.scenario,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            hbar: cfg.hbar(),
            hbar_defaulted: cfg.hbar_defaulted(),
            grid: cfg.grid.iter().map(|a| a.bins).collect(),
            lambda_max: None,
            samples: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub provenance: Provenance,
    pub checks: Vec<CheckRecord>,
    /// Descriptive numbers that are not pass/fail claims.
    pub metrics: BTreeMap<String, f64>,
    pub spectra: Vec<BornSpectrum>,
}

impl RunReport {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            provenance,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            spectra: Vec::new(),
        }
    }

    /// True iff every check passes; an empty report passes.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&mut self, name: impl Into<String>, value: f64, tolerance: f64, oracle: impl Into<String>) {
        self.checks.push(CheckRecord::at_most(name, value, tolerance, oracle));
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// `<scenario>_<pipeline>.csv` for each spectrum, in order.
    pub fn spectrum_files(&self) -> Vec<String> {
        self.spectra
            .iter()
            .map(|s| format!("{}_{}.csv", self.provenance.scenario, s.source.slug()))
            .collect()
    }

    pub fn report_file(&self) -> String {
        format!("{}_report.json", self.provenance.scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn pass_iff_every_check_passes(values in proptest::collection::vec((0.0f64..2.0, 0.5f64..1.5), 0..12)) {
            let mut r = RunReport::new(Provenance::from_config(&ScenarioConfig::bare(ScenarioKind::Selftest)));
            for (i, (v, t)) in values.iter().enumerate() {
                r.check(format!("c{i}"), *v, *t, "exact");
            }
            prop_assert_eq!(r.pass(), values.iter().all(|(v, t)| v <= t));
        }
    }
}
