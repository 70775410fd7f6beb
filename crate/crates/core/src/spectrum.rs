//! Probability tables over observable values.
//!
//! Every pipeline in the crate (quantum, classical, level-set) and every
//! oracle produces the same [`BornSpectrum`], so they can be compared row by
//! row and written through one report path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which computation produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Diagonal eigendensity coefficients `D_{K',0}`.
    QuantumEigendensity,
    /// `<K'|rho|K'>` straight from the eigenvectors.
    QuantumDirect,
    /// `(2 pi)^{N/2} D^c_{K',0}` from Koopman-mode overlaps.
    ClassicalKoopman,
    /// Angle marginal of the action-angle density.
    ClassicalMarginal,
    /// Level-set overlap with a regularized delta.
    LevelSet,
    /// Histogram of seeded samples.
    MonteCarlo,
    /// Closed-form law.
    Analytic,
}

impl Pipeline {
    pub fn slug(&self) -> &'static str {
        match self {
            Pipeline::QuantumEigendensity => "eigendensity",
            Pipeline::QuantumDirect => "direct",
            Pipeline::ClassicalKoopman => "koopman",
            Pipeline::ClassicalMarginal => "marginal",
            Pipeline::LevelSet => "levelset",
            Pipeline::MonteCarlo => "montecarlo",
            Pipeline::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// Observable value(s): eigenvalue vector or bin center.
    pub values: Vec<f64>,
    /// Bin volume. Discrete spectra use the counting measure, width 1.
    pub width: f64,
    pub probability: f64,
}

impl SpectrumRow {
    pub fn density(&self) -> f64 {
        self.probability / self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornSpectrum {
    pub rows: Vec<SpectrumRow>,
    pub degeneracies_summed: bool,
    pub source: Pipeline,
    /// Column names for `values`, e.g. `K_1, K_2` or `K_N`.
    pub labels: Vec<String>,
}

/// The classical pipelines use the same table with binned rows.
pub type ClassicalBornSpectrum = BornSpectrum;

impl BornSpectrum {
    pub fn new(source: Pipeline, labels: Vec<String>, rows: Vec<SpectrumRow>) -> Self {
        Self {
            rows,
            degeneracies_summed: false,
            source,
            labels,
        }
    }

    /// `K_1 .. K_n` column labels.
    pub fn indexed_labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("K_{i}")).collect()
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.probability).collect()
    }

    /// `sum_k p_k f(values_k)`.
    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.rows.iter().map(|r| r.probability * f(&r.values)).sum()
    }

    /// Smallest probability, or 0 for an empty table.
    pub fn min_probability(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows
            .iter()
            .map(|r| r.probability)
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the row layouts agree (same count and same value vectors).
    pub fn check_aligned(&self, other: &BornSpectrum) -> Result<()> {
        if self.rows.len() != other.rows.len() {
            return Err(Error::GridMismatch(format!(
                "{} rows vs {} rows",
                self.rows.len(),
                other.rows.len()
            )));
        }
        for (i, (a, b)) in self.rows.iter().zip(&other.rows).enumerate() {
            let same = a.values.len() == b.values.len()
                && a
                    .values
                    .iter()
                    .zip(&b.values)
                    .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
            if !same {
                return Err(Error::GridMismatch(format!(
                    "row {i}: {:?} vs {:?}",
                    a.values, b.values
                )));
            }
        }
        Ok(())
    }

    /// Largest per-row probability difference.
    pub fn max_abs_difference(&self, other: &BornSpectrum) -> Result<f64> {
        self.check_aligned(other)?;
        Ok(self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a.probability - b.probability).abs())
            .fold(0.0, f64::max))
    }

    /// Largest per-row density difference.
    pub fn max_density_difference(&self, other: &BornSpectrum) -> Result<f64> {
        self.check_aligned(other)?;
        Ok(self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a.density() - b.density()).abs())
            .fold(0.0, f64::max))
    }

    /// Half the L1 distance between the probability vectors.
    pub fn total_variation(&self, other: &BornSpectrum) -> Result<f64> {
        self.check_aligned(other)?;
        Ok(0.5
            * self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| (a.probability - b.probability).abs())
                .sum::<f64>())
    }

    /// Running sums of the probabilities in row order.
    pub fn cumulative(&self) -> Vec<f64> {
        self.rows
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.probability;
                Some(*acc)
            })
            .collect()
    }
}
