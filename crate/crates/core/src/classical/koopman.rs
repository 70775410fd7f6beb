//! Koopman eigenmodes in action-angle variables and the expansion of a
//! density in them.
//!
//! A mode is `R_{K', Lambda}(K, Q) = (2 pi)^{-N/2} delta_reg(K - K') e^{i Lambda . Q}`.
//! With the bin regularization on a grid, `Delta K^N <R_a, R_b> = delta_ab`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{for_each_tensor_node, ActionAngleDensity};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{periodic_nodes, GaussLegendre};
use crate::numerics::{poisson_bracket_with, BracketMethod, GridSpec, KernelKind, KernelSpec, C64};
use crate::spectrum::{BornSpectrum, Pipeline, SpectrumRow};

/// Quadrature used for every action-angle integral: `k_nodes` Gauss-Legendre
/// nodes per action interval and `q_points` trapezoid nodes per angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalQuadrature {
    pub k_nodes: usize,
    pub q_points: usize,
}

impl ClassicalQuadrature {
    pub const DEFAULT_K_NODES: usize = 8;

    /// `4 |Lambda|_max + 8` angle points.
    pub fn for_lambda_max(lambda_max: i64) -> Self {
        Self {
            k_nodes: Self::DEFAULT_K_NODES,
            q_points: (4 * lambda_max.unsigned_abs() + 8) as usize,
        }
    }

    /// The angle grid must hold at least `2 |Lambda| + 2` points.
    pub fn check_nyquist(&self, lambda: i64) -> Result<()> {
        let required = 2 * lambda.unsigned_abs() as usize + 2;
        if self.q_points < required {
            return Err(Error::NyquistViolation {
                points: self.q_points,
                lambda,
                required,
            });
        }
        Ok(())
    }

    fn angle_axes(&self, n: usize) -> Vec<Vec<(f64, f64)>> {
        let w = TAU / self.q_points as f64;
        let axis: Vec<(f64, f64)> = periodic_nodes(self.q_points, TAU).into_iter().map(|x| (x, w)).collect();
        vec![axis; n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanMode {
    pub k_prime: Vec<f64>,
    pub lambda: Vec<i64>,
    pub kernel: KernelSpec,
    /// Action box outside which the mode vanishes (or is negligible).
    pub bounds: Vec<(f64, f64)>,
}

/// Mode centered on `k_prime`, rejected when the center leaves
/// `action_range`.
pub fn koopman_mode(
    k_prime: &[f64],
    lambda: &[i64],
    kernel: KernelSpec,
    action_range: &[(f64, f64)],
) -> Result<KoopmanMode> {
    if k_prime.len() != lambda.len() || k_prime.len() != action_range.len() {
        return Err(Error::DimensionMismatch {
            expected: k_prime.len(),
            found: lambda.len().min(action_range.len()),
        });
    }
    for (i, (&k, &(lo, hi))) in k_prime.iter().zip(action_range).enumerate() {
        if !(k >= lo && k <= hi) {
            return Err(Error::OutOfRange(format!("K'_{} = {k} outside [{lo}, {hi}]", i + 1)));
        }
    }
    let r = kernel.reach();
    let bounds = k_prime
        .iter()
        .zip(action_range)
        .map(|(&k, &(lo, _))| match kernel.kind {
            KernelKind::Bin => (k - r, k + r),
            KernelKind::Gaussian => ((k - r).max(lo), k + r),
        })
        .collect();
    Ok(KoopmanMode {
        k_prime: k_prime.to_vec(),
        lambda: lambda.to_vec(),
        kernel,
        bounds,
    })
}

impl KoopmanMode {
    /// Bin mode occupying exactly cell `flat` of `grid`.
    pub fn for_cell(grid: &GridSpec, flat: usize, lambda: &[i64]) -> Result<Self> {
        if lambda.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "Lambda has {} components, grid has {} axes",
                lambda.len(),
                grid.dim()
            )));
        }
        if flat >= grid.len() {
            return Err(Error::OutOfRange(format!("cell {flat} of {}", grid.len())));
        }
        Ok(Self {
            k_prime: grid.center(flat),
            lambda: lambda.to_vec(),
            kernel: KernelSpec::bin(grid.axes[0].width())?,
            bounds: grid.cell_bounds(flat),
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn delta(&self, k: &[f64]) -> f64 {
        match self.kernel.kind {
            KernelKind::Bin => {
                let inside = k.iter().zip(&self.bounds).all(|(&x, &(lo, hi))| x >= lo && x < hi);
                if inside {
                    self.volume().recip()
                } else {
                    0.0
                }
            }
            KernelKind::Gaussian => k
                .iter()
                .zip(&self.k_prime)
                .map(|(&x, &c)| self.kernel.weight(x - c))
                .product(),
        }
    }

    /// Volume of the bin cell.
    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn phase(&self, angle: &[f64]) -> C64 {
        let arg: f64 = self.lambda.iter().zip(angle).map(|(&l, &a)| l as f64 * a).sum();
        C64::from_polar(1.0, arg)
    }

    pub fn value(&self, k: &[f64], angle: &[f64]) -> C64 {
        self.phase(angle) * self.delta(k) * normalization(self.dim())
    }

    /// Gauss-Legendre nodes covering the mode's action support.
    fn action_axes(&self, k_nodes: usize) -> Vec<Vec<(f64, f64)>> {
        let rule = GaussLegendre::new(k_nodes);
        let panels = match self.kernel.kind {
            KernelKind::Bin => 1,
            KernelKind::Gaussian => 18,
        };
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                let h = (hi - lo) / panels as f64;
                (0..panels)
                    .flat_map(|j| rule.on_interval(lo + j as f64 * h, lo + (j + 1) as f64 * h).collect::<Vec<_>>())
                    .collect()
            })
            .collect()
    }
}

fn normalization(n: usize) -> f64 {
    TAU.powf(-0.5 * n as f64)
}

fn max_abs_lambda(lambda: &[i64]) -> i64 {
    lambda.iter().map(|l| l.abs()).max().unwrap_or(0)
}

/// `D = int rho'(K, Q) conj(R(K, Q)) dK dQ`.
pub fn overlap_coefficient(
    rho: &ActionAngleDensity,
    mode: &KoopmanMode,
    quad: &ClassicalQuadrature,
) -> Result<C64> {
    if rho.dim() != mode.dim() {
        return Err(Error::GridMismatch(format!(
            "density has {} actions, mode has {}",
            rho.dim(),
            mode.dim()
        )));
    }
    quad.check_nyquist(max_abs_lambda(&mode.lambda))?;
    let angles = quad.angle_axes(mode.dim());
    let mut total = C64::new(0.0, 0.0);
    for_each_tensor_node(&mode.action_axes(quad.k_nodes), |k, wk| {
        for_each_tensor_node(&angles, |a, wa| {
            total += mode.value(k, a).conj() * (wk * wa * rho.evaluate(k, a));
        });
    });
    Ok(total)
}

/// All `Lambda` with `|Lambda_i| <= lambda_max`, lexicographic.
pub fn lambda_lattice(n: usize, lambda_max: i64) -> Vec<Vec<i64>> {
    let side: Vec<i64> = (-lambda_max..=lambda_max).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                side.iter().map(move |&l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

fn check_action_grid(grid: &GridSpec, dim: usize) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::GridMismatch(format!("grid has {} axes, density has {dim} actions", grid.dim())));
    }
    if grid.axes.iter().any(|a| a.periodic) {
        return Err(Error::GridMismatch("action axes cannot be periodic".into()));
    }
    Ok(())
}

/// Values of `rho'` on the quadrature nodes of one cell, with weights.
fn cell_samples(
    rho: &ActionAngleDensity,
    grid: &GridSpec,
    cell: usize,
    quad: &ClassicalQuadrature,
) -> Vec<(Vec<f64>, f64, f64)> {
    let rule = GaussLegendre::new(quad.k_nodes);
    let k_axes: Vec<Vec<(f64, f64)>> = grid
        .cell_bounds(cell)
        .into_iter()
        .map(|(lo, hi)| rule.on_interval(lo, hi).collect())
        .collect();
    let angles = quad.angle_axes(grid.dim());
    let mut out = Vec::new();
    for_each_tensor_node(&k_axes, |k, wk| {
        for_each_tensor_node(&angles, |a, wa| {
            out.push((a.to_vec(), wk * wa, rho.evaluate(k, a)));
        });
    });
    out
}

/// `D_{k, Lambda}` for every grid cell `k` and every `|Lambda_i| <= L`.
#[derive(Debug, Clone)]
pub struct ClassicalCoefficientTable {
    pub grid: GridSpec,
    pub lambda_max: i64,
    pub coefficients: BTreeMap<(usize, Vec<i64>), C64>,
}

impl ClassicalCoefficientTable {
    pub fn get(&self, cell: usize, lambda: &[i64]) -> Option<C64> {
        self.coefficients.get(&(cell, lambda.to_vec())).copied()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `max |D_{k, -Lambda} - conj(D_{k, Lambda})|`; zero for a real density.
    pub fn conjugate_symmetry_residual(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|((cell, l), d)| {
                let neg: Vec<i64> = l.iter().map(|x| -x).collect();
                self.get(*cell, &neg).map_or(f64::INFINITY, |m| (m - d.conj()).norm())
            })
            .fold(0.0, f64::max)
    }
}

pub fn coefficient_table(
    rho: &ActionAngleDensity,
    grid: &GridSpec,
    lambda_max: i64,
    quad: &ClassicalQuadrature,
) -> Result<ClassicalCoefficientTable> {
    check_action_grid(grid, rho.dim())?;
    if lambda_max < 0 {
        return Err(Error::InvalidParameter(format!("lambda_max = {lambda_max}")));
    }
    quad.check_nyquist(lambda_max)?;
    let lattice = lambda_lattice(grid.dim(), lambda_max);
    let vol = grid.cell_volume();
    let norm = normalization(grid.dim()) / vol;
    let per_cell: Vec<Vec<C64>> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let samples = cell_samples(rho, grid, cell, quad);
            lattice
                .iter()
                .map(|l| {
                    samples
                        .iter()
                        .map(|(a, w, v)| {
                            let arg: f64 = l.iter().zip(a).map(|(&li, &ai)| li as f64 * ai).sum();
                            C64::from_polar(w * v * norm, -arg)
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut coefficients = BTreeMap::new();
    for (cell, row) in per_cell.into_iter().enumerate() {
        for (l, d) in lattice.iter().zip(row) {
            coefficients.insert((cell, l.clone()), d);
        }
    }
    Ok(ClassicalCoefficientTable {
        grid: grid.clone(),
        lambda_max,
        coefficients,
    })
}

/// `rho'(K, Q) ~ sum_{k, Lambda} Delta K^N D_{k, Lambda} R_{k, Lambda}(K, Q)`,
/// truncated at the table's `lambda_max`. Zero outside the grid.
pub fn reconstruct_classical_density(table: &ClassicalCoefficientTable) -> Result<ActionAngleDensity> {
    let n = table.grid.dim();
    let lattice = lambda_lattice(n, table.lambda_max);
    for cell in 0..table.grid.len() {
        for l in &lattice {
            if table.get(cell, l).is_none() {
                return Err(Error::IncompleteTable(format!("cell {cell}, Lambda {l:?}")));
            }
        }
    }
    let grid = table.grid.clone();
    let coefficients = table.coefficients.clone();
    let norm = normalization(n);
    Ok(ActionAngleDensity::from_fn("reconstruction", n, move |k, angle| {
        let Some(cell) = grid.locate(k) else {
            return 0.0;
        };
        // vol * D * (2 pi)^{-N/2} / vol * e^{i Lambda Q}
        lattice
            .iter()
            .map(|l| {
                let arg: f64 = l.iter().zip(angle).map(|(&li, &ai)| li as f64 * ai).sum();
                (coefficients[&(cell, l.clone())] * C64::from_polar(norm, arg)).re
            })
            .sum()
    }))
}

/// `max |Delta K^N <R_a, R_b> - delta_ab|` over all pairs of bin modes.
pub fn orthonormality_residual(modes: &[KoopmanMode], quad: &ClassicalQuadrature) -> Result<f64> {
    let Some(first) = modes.first() else {
        return Ok(0.0);
    };
    let n = first.dim();
    for m in modes {
        if m.kernel.kind != KernelKind::Bin || m.dim() != n {
            return Err(Error::GridMismatch("Gram check needs bin modes of one dimension".into()));
        }
    }
    let rule = GaussLegendre::new(quad.k_nodes);
    let angles = quad.angle_axes(n);
    let mut worst: f64 = 0.0;
    for a in modes {
        for b in modes {
            let diff: Vec<i64> = a.lambda.iter().zip(&b.lambda).map(|(x, y)| y - x).collect();
            quad.check_nyquist(max_abs_lambda(&diff))?;
            let overlap: Vec<(f64, f64)> = a
                .bounds
                .iter()
                .zip(&b.bounds)
                .map(|(&(l1, h1), &(l2, h2))| (l1.max(l2), h1.min(h2)))
                .collect();
            let same_cell = a.bounds == b.bounds;
            let disjoint = overlap.iter().any(|(lo, hi)| hi <= lo);
            if !same_cell && !disjoint {
                return Err(Error::GridMismatch(format!(
                    "cells {:?} and {:?} partially overlap",
                    a.bounds, b.bounds
                )));
            }
            let mut g = C64::new(0.0, 0.0);
            if !disjoint {
                let k_axes: Vec<Vec<(f64, f64)>> =
                    overlap.iter().map(|&(lo, hi)| rule.on_interval(lo, hi).collect()).collect();
                for_each_tensor_node(&k_axes, |k, wk| {
                    for_each_tensor_node(&angles, |q, wq| {
                        g += a.value(k, q).conj() * b.value(k, q) * (wk * wq);
                    });
                });
            }
            g *= (a.volume() * b.volume()).sqrt();
            let expected = if same_cell && a.lambda == b.lambda { 1.0 } else { 0.0 };
            worst = worst.max((g - expected).norm());
        }
    }
    Ok(worst)
}

/// Discrete completeness on a collocation grid: action points at the cell
/// centers and `2 lambda_max + 1` angle points per axis. Returns
/// `max |C - I|` with
/// `C(x', x'') = Delta K^N Delta Q^N sum_{k, Lambda} Delta K^N conj(R(x')) R(x'')`.
pub fn completeness_residual(grid: &GridSpec, lambda_max: i64) -> Result<f64> {
    check_action_grid(grid, grid.dim())?;
    let n = grid.dim();
    let m = (2 * lambda_max + 1) as usize;
    let dq = TAU / m as f64;
    let lattice = lambda_lattice(n, lambda_max);
    let nodes = periodic_nodes(m, TAU);
    let angle_axes = vec![nodes.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>(); n];
    let mut points: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for cell in 0..grid.len() {
        let k = grid.center(cell);
        for_each_tensor_node(&angle_axes, |a, _| points.push((k.clone(), a.to_vec())));
    }
    let mut modes = Vec::new();
    for cell in 0..grid.len() {
        for l in &lattice {
            modes.push(KoopmanMode::for_cell(grid, cell, l)?);
        }
    }
    let vol = grid.cell_volume();
    let scale = (vol * dq.powi(n as i32) * vol).sqrt();
    let a = DMatrix::from_fn(points.len(), modes.len(), |i, j| {
        modes[j].value(&points[i].0, &points[i].1) * scale
    });
    let c = &a * a.adjoint();
    let id = DMatrix::<C64>::identity(points.len(), points.len());
    Ok((c - id).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `|int R i{K_j, f} dK dQ + Lambda_j int R f dK dQ|`, the weak form of
/// `i{K_j, R} = Lambda_j R`. The bracket is taken numerically with `(Q, K)`
/// as the canonical pair; `f(K, Q)` must be smooth and periodic in `Q`.
pub fn weak_eigen_residual(
    mode: &KoopmanMode,
    component: usize,
    test_fn: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    quad: &ClassicalQuadrature,
    method: BracketMethod,
) -> Result<f64> {
    let n = mode.dim();
    if component >= n {
        return Err(Error::OutOfRange(format!("component {component} of {n}")));
    }
    quad.check_nyquist(max_abs_lambda(&mode.lambda))?;
    let coordinate = move |k: &[f64], _: &[f64]| k[component];
    let angles = quad.angle_axes(n);
    let mut bracket_term = C64::new(0.0, 0.0);
    let mut plain_term = C64::new(0.0, 0.0);
    let mut failure = None;
    for_each_tensor_node(&mode.action_axes(quad.k_nodes), |k, wk| {
        for_each_tensor_node(&angles, |a, wa| {
            let r = mode.value(k, a) * (wk * wa);
            match poisson_bracket_with(&coordinate, test_fn, k, a, method) {
                Ok(b) => bracket_term += r * C64::new(0.0, b),
                Err(e) => failure = Some(e),
            }
            plain_term += r * test_fn(k, a);
        });
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((bracket_term + plain_term * mode.lambda[component] as f64).norm())
}

fn spectrum_rows(grid: &GridSpec, densities: Vec<f64>) -> Vec<SpectrumRow> {
    let vol = grid.cell_volume();
    densities
        .into_iter()
        .enumerate()
        .map(|(cell, d)| SpectrumRow {
            values: grid.center(cell),
            width: vol,
            probability: d * vol,
        })
        .collect()
}

/// Action density per cell read off the `Lambda = 0` coefficients:
/// `(2 pi)^{N/2} Re D_{k, 0}`.
pub fn born_spectrum_classical(
    rho: &ActionAngleDensity,
    grid: &GridSpec,
    quad: &ClassicalQuadrature,
) -> Result<BornSpectrum> {
    check_action_grid(grid, rho.dim())?;
    let zero = vec![0i64; grid.dim()];
    let densities: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let mode = KoopmanMode::for_cell(grid, cell, &zero)?;
            Ok(overlap_coefficient(rho, &mode, quad)?.re / normalization(grid.dim()))
        })
        .collect::<Result<_>>()?;
    Ok(BornSpectrum::new(
        Pipeline::ClassicalKoopman,
        BornSpectrum::indexed_labels(grid.dim()),
        spectrum_rows(grid, densities),
    ))
}

/// Cell averages of `int rho'(K, Q) dQ`, integrating the angles directly.
pub fn marginal_oracle(
    rho: &ActionAngleDensity,
    grid: &GridSpec,
    quad: &ClassicalQuadrature,
) -> Result<BornSpectrum> {
    check_action_grid(grid, rho.dim())?;
    let vol = grid.cell_volume();
    let densities: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|cell| cell_samples(rho, grid, cell, quad).iter().map(|(_, w, v)| w * v).sum::<f64>() / vol)
        .collect();
    Ok(BornSpectrum::new(
        Pipeline::ClassicalMarginal,
        BornSpectrum::indexed_labels(grid.dim()),
        spectrum_rows(grid, densities),
    ))
}
