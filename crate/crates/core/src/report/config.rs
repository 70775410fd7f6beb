//! Scenario files: one JSON object per run.
//!
//! ```json
//! {
//!   "scenario": "classical",
//!   "name": "thermal",
//!   "seed": 7,
//!   "system": {"kind": "harmonic", "oscillators": [{"mass": 1.0, "omega": 1.0}]},
//!   "state": {"kind": "thermal", "temperature": 1.0},
//!   "grid": [{"min": 0.0, "max": 16.0, "bins": 64}],
//!   "tolerances": {"born_equivalence": 1e-10}
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classical::chart::Oscillator;
use crate::classical::montecarlo::MIN_SAMPLES;
use crate::error::{Error, Result};
use crate::numerics::{Axis, GridSpec, KernelSpec, C64};
use crate::quantum::io::{read_records, MatrixRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Quantum,
    Classical,
    Levelset,
    Correspondence,
    Selftest,
}

impl ScenarioKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ScenarioKind::Quantum => "quantum",
            ScenarioKind::Classical => "classical",
            ScenarioKind::Levelset => "levelset",
            ScenarioKind::Correspondence => "correspondence",
            ScenarioKind::Selftest => "selftest",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// An operator given inline, as a diagonal, or by file reference (resolved
/// against the config's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(MatrixRecord),
    Diagonal {
        #[serde(default)]
        label: String,
        diagonal: Vec<f64>,
    },
    File {
        file: PathBuf,
        #[serde(default)]
        index: usize,
    },
}

impl MatrixSource {
    pub fn label(&self, fallback: &str) -> String {
        let l = match self {
            MatrixSource::Inline(r) => r.label.clone(),
            MatrixSource::Diagonal { label, .. } => label.clone(),
            MatrixSource::File { .. } => String::new(),
        };
        if l.is_empty() {
            fallback.to_string()
        } else {
            l
        }
    }

    /// Dense matrix; `path` names the field in diagnostics.
    pub fn load(&self, base: &Path, path: &str) -> Result<DMatrix<C64>> {
        match self {
            MatrixSource::Inline(r) => r.to_matrix(path),
            MatrixSource::Diagonal { diagonal, .. } => {
                if diagonal.is_empty() {
                    return Err(Error::schema(format!("{path}.diagonal"), "must not be empty"));
                }
                let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| C64::new(x, 0.0)));
                Ok(DMatrix::from_diagonal(&d))
            }
            MatrixSource::File { file, index } => {
                let records = read_records(&base.join(file))?;
                let r = records.get(*index).ok_or_else(|| {
                    Error::schema(
                        format!("{path}.index"),
                        format!("file holds {} records, index {index} requested", records.len()),
                    )
                })?;
                r.to_matrix(path)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Commuting Hermitian observables.
    Matrices { observables: Vec<MatrixSource> },
    Harmonic { oscillators: Vec<Oscillator> },
    FreeParticle {
        mass: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    Quartic {
        mass: f64,
        coupling: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// State vector as `[re, im]` pairs.
    Pure { vector: Vec<[f64; 2]> },
    Mixed { matrix: MatrixSource },
    /// Seeded random state of the system's dimension.
    Random {
        #[serde(default)]
        mixed: bool,
    },
    Thermal { temperature: f64 },
    Gaussian {
        p0: Vec<f64>,
        q0: Vec<f64>,
        sigma_p: Vec<f64>,
        sigma_q: Vec<f64>,
    },
    /// Oscillator coherent state with mean quantum number `n_bar`.
    Coherent { n_bar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

/// Optional overrides; unset entries fall back to per-scenario defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub born_equivalence: Option<f64>,
    pub superoperator: Option<f64>,
    pub gram: Option<f64>,
    pub total_variation: Option<f64>,
    pub round_trip: Option<f64>,
    pub chart: Option<f64>,
    pub conjugate_time: Option<f64>,
    pub correspondence: Option<f64>,
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("born_equivalence", self.born_equivalence),
            ("superoperator", self.superoperator),
            ("gram", self.gram),
            ("total_variation", self.total_variation),
            ("round_trip", self.round_trip),
            ("chart", self.chart),
            ("conjugate_time", self.conjugate_time),
            ("correspondence", self.correspondence),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.entries() {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::schema(
                        format!("tolerances.{name}"),
                        format!("must be positive and finite, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Prefix of the output files; defaults to the scenario kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub hbar: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lambda_max: Option<i64>,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub grid: Vec<AxisSpec>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    /// Monte Carlo sample count.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Midpoint nodes per phase-space axis for level-set quadrature.
    #[serde(default)]
    pub quadrature_points: Option<usize>,
    /// Probe count for chart and conjugate-time checks.
    #[serde(default)]
    pub probes: Option<usize>,
    /// Extra mean quantum numbers for the correspondence sweep.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory that relative file references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub const DEFAULT_HBAR: f64 = 1.0;

impl ScenarioConfig {
    /// A config with only the kind set, as used by `selftest` without a file.
    pub fn bare(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            name: None,
            hbar: None,
            seed: 0,
            lambda_max: None,
            system: None,
            state: None,
            grid: Vec::new(),
            kernel: None,
            samples: None,
            quadrature_points: None,
            probes: None,
            sweep: None,
            tolerances: Tolerances::default(),
            output: None,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let mut cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        de.end().map_err(|e| Error::schema("<root>", e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.scenario.slug().to_string())
    }

    pub fn hbar(&self) -> f64 {
        self.hbar.unwrap_or(DEFAULT_HBAR)
    }

    pub fn hbar_defaulted(&self) -> bool {
        self.hbar.is_none()
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.iter().map(|a| Axis::bins(a.min, a.max, a.bins)).collect())
    }

    pub fn system(&self) -> Result<&SystemSpec> {
        self.system.as_ref().ok_or_else(|| Error::schema("system", "required for this scenario"))
    }

    pub fn state(&self) -> Result<&StateSpec> {
        self.state.as_ref().ok_or_else(|| Error::schema("state", "required for this scenario"))
    }

    /// Checks everything that does not need the numerics: positivity,
    /// required fields per kind, grid shapes, and file references.
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if let Some(name) = &self.name {
            let ok = !name.is_empty()
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(Error::schema("name", "use letters, digits, `_` or `-`"));
            }
        }
        if let Some(h) = self.hbar {
            positive("hbar", h)?;
        }
        if let Some(l) = self.lambda_max {
            if l < 0 {
                return Err(Error::schema("lambda_max", format!("must be non-negative, got {l}")));
            }
        }
        if let Some(s) = self.samples {
            if s < MIN_SAMPLES {
                return Err(Error::schema("samples", format!("must be at least {MIN_SAMPLES}, got {s}")));
            }
        }
        if self.quadrature_points == Some(0) {
            return Err(Error::schema("quadrature_points", "must be at least 1"));
        }
        if self.probes == Some(0) {
            return Err(Error::schema("probes", "must be at least 1"));
        }
        if let Some(k) = &self.kernel {
            positive("kernel.width", k.width)?;
        }
        for (i, a) in self.grid.iter().enumerate() {
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::schema(format!("grid[{i}]"), "need finite min < max"));
            }
            if a.bins == 0 {
                return Err(Error::schema(format!("grid[{i}].bins"), "must be at least 1"));
            }
        }
        match self.scenario {
            ScenarioKind::Selftest => Ok(()),
            ScenarioKind::Quantum => self.validate_quantum(),
            ScenarioKind::Classical => self.validate_classical(),
            ScenarioKind::Levelset => self.validate_levelset(),
            ScenarioKind::Correspondence => self.validate_correspondence(),
        }
    }

    fn validate_quantum(&self) -> Result<()> {
        let SystemSpec::Matrices { observables } = self.system()? else {
            return Err(Error::schema("system.kind", "quantum scenarios need `matrices`"));
        };
        if observables.is_empty() {
            return Err(Error::schema("system.observables", "must list at least one observable"));
        }
        for (i, o) in observables.iter().enumerate() {
            self.check_file(o, &format!("system.observables[{i}]"))?;
        }
        match self.state()? {
            StateSpec::Pure { vector } if vector.is_empty() => {
                Err(Error::schema("state.vector", "must not be empty"))
            }
            StateSpec::Pure { .. } | StateSpec::Random { .. } => Ok(()),
            StateSpec::Mixed { matrix } => self.check_file(matrix, "state.matrix"),
            _ => Err(Error::schema("state.kind", "quantum scenarios take `pure`, `mixed` or `random`")),
        }
    }

    fn validate_classical(&self) -> Result<()> {
        let SystemSpec::Harmonic { oscillators } = self.system()? else {
            return Err(Error::schema("system.kind", "classical scenarios need `harmonic`"));
        };
        check_oscillators(oscillators)?;
        let n = oscillators.len();
        match self.state()? {
            StateSpec::Thermal { temperature } => positive("state.temperature", *temperature)?,
            StateSpec::Gaussian { .. } => check_gaussian(self.state()?, n)?,
            _ => return Err(Error::schema("state.kind", "classical scenarios take `thermal` or `gaussian`")),
        }
        if self.grid.len() != n {
            return Err(Error::schema(
                "grid",
                format!("need one action axis per oscillator ({n}), found {}", self.grid.len()),
            ));
        }
        Ok(())
    }

    fn validate_levelset(&self) -> Result<()> {
        let harmonic = match self.system()? {
            SystemSpec::FreeParticle { mass, margin } => {
                positive("system.mass", *mass)?;
                positive("system.margin", *margin)?;
                false
            }
            SystemSpec::Quartic { mass, coupling, margin } => {
                positive("system.mass", *mass)?;
                positive("system.coupling", *coupling)?;
                positive("system.margin", *margin)?;
                false
            }
            SystemSpec::Harmonic { oscillators } => {
                check_oscillators(oscillators)?;
                if oscillators.len() != 1 {
                    return Err(Error::schema("system.oscillators", "level-set scenarios take one oscillator"));
                }
                true
            }
            SystemSpec::Matrices { .. } => {
                return Err(Error::schema("system.kind", "level-set scenarios need a phase-space system"))
            }
        };
        match self.state()? {
            StateSpec::Gaussian { .. } => check_gaussian(self.state()?, 1)?,
            StateSpec::Thermal { temperature } if harmonic => positive("state.temperature", *temperature)?,
            _ => {
                return Err(Error::schema(
                    "state.kind",
                    "level-set scenarios take `gaussian` (or `thermal` for a harmonic system)",
                ))
            }
        }
        if self.grid.len() != 1 {
            return Err(Error::schema("grid", "level-set scenarios take exactly one axis"));
        }
        Ok(())
    }

    fn validate_correspondence(&self) -> Result<()> {
        let SystemSpec::Harmonic { oscillators } = self.system()? else {
            return Err(Error::schema("system.kind", "correspondence scenarios need `harmonic`"));
        };
        check_oscillators(oscillators)?;
        if oscillators.len() != 1 {
            return Err(Error::schema("system.oscillators", "correspondence scenarios take one oscillator"));
        }
        let StateSpec::Coherent { n_bar } = self.state()? else {
            return Err(Error::schema("state.kind", "correspondence scenarios take `coherent`"));
        };
        non_negative("state.n_bar", *n_bar)?;
        for (i, &n) in self.sweep.iter().flatten().enumerate() {
            non_negative(&format!("sweep[{i}]"), n)?;
        }
        Ok(())
    }

    fn check_file(&self, source: &MatrixSource, path: &str) -> Result<()> {
        if let MatrixSource::File { file, .. } = source {
            if !self.base_dir.join(file).is_file() {
                return Err(Error::schema(
                    format!("{path}.file"),
                    format!("`{}` does not exist", self.base_dir.join(file).display()),
                ));
            }
        }
        Ok(())
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::schema(path, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::schema(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn check_oscillators(oscillators: &[Oscillator]) -> Result<()> {
    if oscillators.is_empty() {
        return Err(Error::schema("system.oscillators", "must list at least one oscillator"));
    }
    for (i, o) in oscillators.iter().enumerate() {
        positive(&format!("system.oscillators[{i}].mass"), o.mass)?;
        positive(&format!("system.oscillators[{i}].omega"), o.omega)?;
    }
    Ok(())
}

fn check_gaussian(state: &StateSpec, n: usize) -> Result<()> {
    let StateSpec::Gaussian { p0, q0, sigma_p, sigma_q } = state else {
        return Ok(());
    };
    for (name, v) in [("p0", p0), ("q0", q0), ("sigma_p", sigma_p), ("sigma_q", sigma_q)] {
        if v.len() != n {
            return Err(Error::schema(format!("state.{name}"), format!("expected {n} entries, found {}", v.len())));
        }
    }
    for (i, &s) in sigma_p.iter().chain(sigma_q).enumerate() {
        let name = if i < n { "sigma_p" } else { "sigma_q" };
        positive(&format!("state.{name}[{}]", i % n), s)?;
    }
    Ok(())
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Unreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    ScenarioConfig::from_json_str(&text, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::from_json_str(text, Path::new("."))
    }

    const QUBIT: &str = r#"{
        "scenario": "quantum",
        "system": {"kind": "matrices", "observables": [{"label": "Z", "diagonal": [1.0, -1.0]}]},
        "state": {"kind": "pure", "vector": [[0.6, 0.0], [0.0, 0.8]]}
    }"#;

    #[test]
    fn minimal_quantum_config() {
        let c = parse(QUBIT).unwrap();
        assert_eq!(c.scenario, ScenarioKind::Quantum);
        assert_eq!(c.name(), "quantum");
        assert_eq!(c.hbar(), 1.0);
        assert!(c.hbar_defaulted());
        let SystemSpec::Matrices { observables } = c.system().unwrap() else {
            panic!()
        };
        let m = observables[0].load(Path::new("."), "x").unwrap();
        assert_eq!(m[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(observables[0].label("K_1"), "Z");
    }

    #[test]
    fn negative_tolerance_names_the_field() {
        let text = QUBIT.replace(
            "\"scenario\": \"quantum\",",
            "\"scenario\": \"quantum\", \"tolerances\": {\"born_equivalence\": -1e-12},",
        );
        match parse(&text) {
            Err(Error::SchemaViolation { path, .. }) => assert_eq!(path, "tolerances.born_equivalence"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_carry_the_path() {
        let text = QUBIT.replace("\"scenario\": \"quantum\",", "\"scenario\": \"quantum\", \"seed\": \"x\",");
        match parse(&text) {
            Err(Error::SchemaViolation { path, .. }) => assert_eq!(path, "seed"),
            other => panic!("{other:?}"),
        }
        match parse(r#"{"scenario": "quantum", "colour": 1}"#) {
            Err(Error::SchemaViolation { path, reason }) => {
                assert_eq!(path, "colour");
                assert!(reason.contains("unknown field"));
            }
            other => panic!("{other:?}"),
        }
        match parse(r#"{"scenario": "sideways"}"#) {
            Err(Error::SchemaViolation { path, .. }) => assert_eq!(path, "scenario"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_pieces_are_reported() {
        assert!(matches!(
            parse(r#"{"scenario": "quantum"}"#),
            Err(Error::SchemaViolation { path, .. }) if path == "system"
        ));
        let no_grid = r#"{"scenario": "classical",
            "system": {"kind": "harmonic", "oscillators": [{"mass": 1.0, "omega": 1.0}]},
            "state": {"kind": "thermal", "temperature": 1.0}}"#;
        assert!(matches!(parse(no_grid), Err(Error::SchemaViolation { path, .. }) if path == "grid"));
        let bad_osc = no_grid.replace("\"omega\": 1.0", "\"omega\": 0.0");
        assert!(matches!(
            parse(&bad_osc),
            Err(Error::SchemaViolation { path, .. }) if path == "system.oscillators[0].omega"
        ));
    }

    #[test]
    fn missing_file_is_reported() {
        let text = r#"{"scenario": "quantum",
            "system": {"kind": "matrices", "observables": [{"file": "nowhere.json"}]},
            "state": {"kind": "random"}}"#;
        assert!(matches!(
            parse(text),
            Err(Error::SchemaViolation { path, .. }) if path == "system.observables[0].file"
        ));
    }

    #[test]
    fn selftest_needs_nothing() {
        let c = parse(r#"{"scenario": "selftest", "hbar": 2.0}"#).unwrap();
        assert!(!c.hbar_defaulted());
        assert!(matches!(
            parse(r#"{"scenario": "selftest", "hbar": 0}"#),
            Err(Error::SchemaViolation { path, .. }) if path == "hbar"
        ));
    }

    #[test]
    fn unreadable_file() {
        assert!(matches!(
            parse_config(Path::new("/definitely/not/here.json")),
            Err(Error::Unreadable { .. })
        ));
    }
}
