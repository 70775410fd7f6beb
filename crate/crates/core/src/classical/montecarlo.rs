//! Histogram of an observable map under samples of a phase-space density.

use serde::{Deserialize, Serialize};

use super::density::PhaseSpaceDensity;
use crate::error::{Error, Result};
use crate::numerics::sampling::{chunked_reduce, CHUNK};
use crate::numerics::{GridSpec, SeededStream};
use crate::spectrum::{BornSpectrum, Pipeline, SpectrumRow};

pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct McResult {
    pub spectrum: BornSpectrum,
    pub counts: Vec<u64>,
    /// Samples whose observable value fell outside the grid.
    pub out_of_range: u64,
    pub empty_bins: Vec<usize>,
}

pub type ObservableMap<'a> = &'a (dyn Fn(&[f64], &[f64]) -> Vec<f64> + Sync);

/// Bin `observable(p, q)` over `cfg.samples` draws. Probabilities are
/// `count / samples`, so mass outside the grid is missing from the table and
/// reported in `out_of_range`.
pub fn monte_carlo_oracle(
    rho_c: &PhaseSpaceDensity,
    observable: ObservableMap<'_>,
    grid: &GridSpec,
    cfg: &McConfig,
) -> Result<McResult> {
    if cfg.samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
            cfg.samples
        )));
    }
    let sampler = rho_c.sampler().ok_or_else(|| Error::NoSampler(rho_c.label.clone()))?;
    let stream = SeededStream::new(cfg.seed);
    let cells = grid.len();
    // last slot counts samples outside the grid
    let counts = chunked_reduce(
        cfg.samples,
        CHUNK,
        |range| {
            let mut local = vec![0u64; cells + 1];
            for i in range {
                let mut rng = stream.substream(i as u64);
                let (p, q) = sampler(&mut rng);
                let slot = grid.locate(&observable(&p, &q)).unwrap_or(cells);
                local[slot] += 1;
            }
            local
        },
        vec![0u64; cells + 1],
        |mut acc, part| {
            for (a, b) in acc.iter_mut().zip(part) {
                *a += b;
            }
            acc
        },
    );
    let out_of_range = counts[cells];
    let counts = counts[..cells].to_vec();
    let vol = grid.cell_volume();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(cell, &c)| SpectrumRow {
            values: grid.center(cell),
            width: vol,
            probability: c as f64 / cfg.samples as f64,
        })
        .collect();
    let empty_bins = counts.iter().enumerate().filter(|(_, &c)| c == 0).map(|(i, _)| i).collect();
    Ok(McResult {
        spectrum: BornSpectrum::new(Pipeline::MonteCarlo, BornSpectrum::indexed_labels(grid.dim()), rows),
        counts,
        out_of_range,
        empty_bins,
    })
}
