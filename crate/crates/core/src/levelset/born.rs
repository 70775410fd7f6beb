//! Born spectrum of a single phase-space observable through its level sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::maps::ScalarObservableMap;
use crate::classical::density::{midpoint_nodes, PhaseSpaceDensity};
use crate::classical::montecarlo::{monte_carlo_oracle, McConfig, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::numerics::sampling::{chunked_reduce, CHUNK};
use crate::numerics::{BracketMethod, GridSpec, KernelKind, KernelSpec, SeededStream};
use crate::spectrum::{BornSpectrum, Pipeline, SpectrumRow};

/// Largest fraction of the mass allowed to fall outside the grid.
pub const UNCOVERED_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelSetMethod {
    /// Midpoint tensor rule with `points` nodes per phase-space axis. With
    /// the bin kernel each node cell is spread over the bins according to
    /// the observable linearized across the cell.
    Quadrature { points: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct LevelSetSpectrum {
    pub spectrum: BornSpectrum,
    /// Global normalization: one over the mass captured by the grid.
    pub xi: f64,
    /// Fraction of the mass the grid failed to capture.
    pub outside_mass: f64,
}

fn check_grid(grid: &GridSpec, kernel: &KernelSpec) -> Result<f64> {
    if grid.dim() != 1 || grid.axes[0].periodic {
        return Err(Error::GridMismatch("level-set grids have one non-periodic axis".into()));
    }
    let width = grid.axes[0].width();
    if kernel.kind == KernelKind::Bin && (kernel.width - width).abs() > 1e-12 * width {
        return Err(Error::GridMismatch(format!(
            "bin kernel width {} differs from grid spacing {width}",
            kernel.width
        )));
    }
    Ok(width)
}

/// `P(K') = xi int rho_c(p, q) delta[K' - K(p, q)] dp dq` on every cell of
/// `grid`, with the delta regularized by `kernel`.
pub fn born_spectrum_levelset(
    rho_c: &PhaseSpaceDensity,
    observable: &ScalarObservableMap,
    grid: &GridSpec,
    kernel: KernelSpec,
    method: LevelSetMethod,
) -> Result<LevelSetSpectrum> {
    let width = check_grid(grid, &kernel)?;
    let (masses, total, source) = match method {
        LevelSetMethod::Quadrature { points } => {
            let (m, t) = quadrature_masses(rho_c, observable, grid, &kernel, points)?;
            (m, t, Pipeline::LevelSet)
        }
        LevelSetMethod::MonteCarlo { samples, seed } => {
            let (m, t) = sampled_masses(rho_c, observable, grid, &kernel, &McConfig { samples, seed })?;
            (m, t, Pipeline::MonteCarlo)
        }
    };
    let captured: f64 = masses.iter().sum();
    if !(total > 0.0 && captured > 0.0) {
        return Err(Error::InvalidDensity(format!("`{}` carries no mass on the grid", rho_c.label)));
    }
    let outside_mass = ((total - captured) / total).max(0.0);
    if outside_mass > UNCOVERED_TOLERANCE {
        return Err(Error::SupportNotCovered(format!(
            "{outside_mass:.3e} of the mass of `{}` falls outside [{}, {})",
            rho_c.label, grid.axes[0].min, grid.axes[0].max
        )));
    }
    let xi = captured.recip();
    let rows = masses
        .iter()
        .enumerate()
        .map(|(cell, &m)| SpectrumRow {
            values: grid.center(cell),
            width,
            probability: xi * m,
        })
        .collect();
    Ok(LevelSetSpectrum {
        spectrum: BornSpectrum::new(source, vec!["K_N".into()], rows),
        xi,
        outside_mass,
    })
}

/// Adds `weight` at observable value `k` into per-cell masses.
fn deposit(grid: &GridSpec, kernel: &KernelSpec, k: f64, weight: f64, masses: &mut [f64]) {
    match kernel.kind {
        KernelKind::Bin => {
            if let Some(cell) = grid.locate(&[k]) {
                masses[cell] += weight;
            }
        }
        KernelKind::Gaussian => {
            let axis = &grid.axes[0];
            let w = axis.width();
            let reach = kernel.reach();
            let lo = (((k - reach - axis.min) / w).floor().max(0.0)) as usize;
            let hi = (((k + reach - axis.min) / w).ceil().max(0.0) as usize).min(axis.count);
            for (cell, m) in masses.iter_mut().enumerate().take(hi).skip(lo) {
                *m += weight * w * kernel.weight(axis.center(cell) - k);
            }
        }
    }
}

/// Relative width below which a spread component is treated as zero.
const SPREAD_CUTOFF: f64 = 1e-6;

/// CDF at `x` (relative to the center) of a sum of centered uniforms with the
/// given widths, by inclusion-exclusion. Widths must be positive.
fn uniform_sum_cdf(x: f64, widths: &[f64]) -> f64 {
    let n = widths.len();
    if n == 0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    let total: f64 = widths.iter().sum();
    let y = x + 0.5 * total;
    if y <= 0.0 {
        return 0.0;
    }
    if y >= total {
        return 1.0;
    }
    let mut acc = 0.0;
    for mask in 0u32..(1 << n) {
        let shift: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| widths[i]).sum();
        let t = y - shift;
        if t > 0.0 {
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * t.powi(n as i32);
        }
    }
    let denom: f64 = (1..=n).map(|k| k as f64).product::<f64>() * widths.iter().product::<f64>();
    (acc / denom).clamp(0.0, 1.0)
}

/// Deposits `weight` for a node cell whose observable value runs over
/// `k + sum_i u_i`, `u_i` uniform on `[-w_i/2, w_i/2]`. Cells centered
/// outside the grid contribute nothing; spill past either end of the grid
/// is folded into the end cell.
fn deposit_spread(grid: &GridSpec, k: f64, widths: &[f64], weight: f64, masses: &mut [f64]) {
    let axis = &grid.axes[0];
    let Some(center) = axis.bin_index(k) else {
        return;
    };
    let largest = widths.iter().copied().fold(0.0, f64::max);
    let active: Vec<f64> = widths.iter().copied().filter(|&w| w > SPREAD_CUTOFF * largest && w > 0.0).collect();
    let half = 0.5 * active.iter().sum::<f64>();
    if half == 0.0 {
        masses[center] += weight;
        return;
    }
    let first = axis.bin_index((k - half).max(axis.min)).unwrap_or(0);
    let last = axis.bin_index(k + half).unwrap_or(axis.count - 1);
    let mut below = 0.0;
    for cell in first..=last {
        let upper = if cell == axis.count - 1 { 1.0 } else { uniform_sum_cdf(axis.upper_edge(cell) - k, &active) };
        masses[cell] += weight * (upper - below);
        below = upper;
    }
}

fn quadrature_masses(
    rho_c: &PhaseSpaceDensity,
    observable: &ScalarObservableMap,
    grid: &GridSpec,
    kernel: &KernelSpec,
    points: usize,
) -> Result<(Vec<f64>, f64)> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!("quadrature needs at least 2 points per axis, got {points}")));
    }
    let n = rho_c.dim();
    let axes: Vec<Vec<(f64, f64)>> = rho_c
        .support
        .iter()
        .map(|&(lo, hi)| midpoint_nodes(lo, hi, points))
        .collect();
    let spacing: Vec<f64> = rho_c.support.iter().map(|&(lo, hi)| (hi - lo) / points as f64).collect();
    let method = BracketMethod::Central {
        step: 1e-3 * spacing.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let cells = grid.len();
    // one slab per node of the first axis, folded in order
    let slabs: Vec<(Vec<f64>, f64)> = axes[0]
        .par_iter()
        .map(|&(x0, w0)| {
            let mut masses = vec![0.0; cells];
            let mut total = 0.0;
            let rest = &axes[1..];
            let mut x = vec![0.0; 2 * n];
            let mut widths = vec![0.0; 2 * n];
            x[0] = x0;
            crate::classical::density::for_each_tensor_node(rest, |r, wr| {
                x[1..].copy_from_slice(r);
                let (p, q) = x.split_at(n);
                let weight = w0 * wr * rho_c.evaluate(p, q);
                if weight == 0.0 {
                    return;
                }
                total += weight;
                let k = observable.evaluate(p, q);
                if kernel.kind == KernelKind::Gaussian {
                    deposit(grid, kernel, k, weight, &mut masses);
                    return;
                }
                match observable.gradient(p, q, method) {
                    Ok((gp, gq)) if gp.iter().chain(&gq).all(|g| g.is_finite()) => {
                        for (i, g) in gp.iter().chain(&gq).enumerate() {
                            widths[i] = g.abs() * spacing[i];
                        }
                        deposit_spread(grid, k, &widths, weight, &mut masses);
                    }
                    _ => deposit(grid, kernel, k, weight, &mut masses),
                }
            });
            (masses, total)
        })
        .collect();
    Ok(slabs.into_iter().fold((vec![0.0; cells], 0.0), |(mut acc, t), (m, s)| {
        for (a, b) in acc.iter_mut().zip(m) {
            *a += b;
        }
        (acc, t + s)
    }))
}

fn sampled_masses(
    rho_c: &PhaseSpaceDensity,
    observable: &ScalarObservableMap,
    grid: &GridSpec,
    kernel: &KernelSpec,
    cfg: &McConfig,
) -> Result<(Vec<f64>, f64)> {
    if kernel.kind == KernelKind::Bin {
        let map = |p: &[f64], q: &[f64]| vec![observable.evaluate(p, q)];
        let r = monte_carlo_oracle(rho_c, &map, grid, cfg)?;
        let masses = r.counts.iter().map(|&c| c as f64 / cfg.samples as f64).collect();
        return Ok((masses, 1.0));
    }
    if cfg.samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
            cfg.samples
        )));
    }
    let sampler = rho_c.sampler().ok_or_else(|| Error::NoSampler(rho_c.label.clone()))?;
    let stream = SeededStream::new(cfg.seed);
    let cells = grid.len();
    let share = 1.0 / cfg.samples as f64;
    let masses = chunked_reduce(
        cfg.samples,
        CHUNK,
        |range| {
            let mut local = vec![0.0; cells];
            for i in range {
                let (p, q) = sampler(&mut stream.substream(i as u64));
                deposit(grid, kernel, observable.evaluate(&p, &q), share, &mut local);
            }
            local
        },
        vec![0.0; cells],
        |mut acc, part| {
            for (a, b) in acc.iter_mut().zip(part) {
                *a += b;
            }
            acc
        },
    );
    Ok((masses, 1.0))
}

/// Largest change of the cumulative probability at the coarse grid's edges
/// when every coarse cell is split into `fine.len() / coarse.len()` cells.
pub fn refinement_shift(coarse: &BornSpectrum, fine: &BornSpectrum) -> Result<f64> {
    let (nc, nf) = (coarse.rows.len(), fine.rows.len());
    if nc == 0 || nf % nc != 0 {
        return Err(Error::GridMismatch(format!("{nf} fine cells do not refine {nc} coarse cells")));
    }
    let ratio = nf / nc;
    let cc = coarse.cumulative();
    let cf = fine.cumulative();
    Ok((0..nc).map(|i| (cc[i] - cf[(i + 1) * ratio - 1]).abs()).fold(0.0, f64::max))
}
