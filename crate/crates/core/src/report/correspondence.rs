//! Oscillator coherent state against its classical phase-space Gaussian on a
//! shared energy axis.
//!
//! The classical partner of the coherent state `|alpha>` with real
//! `alpha = sqrt(n_bar)` is its Wigner function: a Gaussian centered at
//! `q0 = sqrt(2 hbar n_bar / m w)`, `p0 = 0` with `sigma_q^2 = hbar / 2 m w`
//! and `sigma_p^2 = m w hbar / 2`. Both energy means are then
//! `hbar w (n_bar + 1/2)`; the variances are `(hbar w)^2 n_bar` and
//! `(hbar w)^2 (n_bar + 1/4)`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::classical::chart::{HarmonicChart, Oscillator};
use crate::classical::density::{pushforward_density, PhaseSpaceDensity};
use crate::classical::koopman::{born_spectrum_classical, ClassicalQuadrature};
use crate::error::{Error, Result};
use crate::numerics::{GridSpec, C64};
use crate::quantum::{
    born_spectrum_quantum, eigendensity_basis, joint_spectrum, Observable, QuantumDensity,
};
use crate::spectrum::{BornSpectrum, SpectrumRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrespondenceParams {
    pub oscillator: Oscillator,
    pub hbar: f64,
    pub n_bar: f64,
    /// Sets the angle quadrature: `4 lambda_max + 8` points.
    pub lambda_max: i64,
}

#[derive(Debug, Clone)]
pub struct CorrespondenceOutcome {
    /// Fock-level probabilities at `hbar w (n + 1/2)`, bin width `hbar w`.
    pub quantum: BornSpectrum,
    /// Classical energy probabilities on cells `[n hbar w, (n + 1) hbar w)`.
    pub classical: BornSpectrum,
    pub analytic_mean: f64,
    pub quantum_mean: f64,
    pub classical_mean: f64,
    pub quantum_variance: f64,
    pub classical_variance: f64,
    /// Largest gap between the quantum table and the Poisson law.
    pub poisson_residual: f64,
    pub cutoff: usize,
}

impl CorrespondenceOutcome {
    pub fn relative_mean_difference(&self) -> f64 {
        (self.quantum_mean - self.classical_mean).abs() / self.quantum_mean.abs()
    }

    /// Undefined (`None`) for the vacuum, whose quantum variance is zero.
    pub fn relative_variance_difference(&self) -> Option<f64> {
        (self.quantum_variance > 0.0)
            .then(|| (self.quantum_variance - self.classical_variance).abs() / self.quantum_variance)
    }

    pub fn quantum_peak(&self) -> usize {
        argmax(&self.quantum)
    }

    pub fn classical_peak(&self) -> usize {
        argmax(&self.classical)
    }
}

fn argmax(s: &BornSpectrum) -> usize {
    let mut best = 0;
    for (i, r) in s.rows.iter().enumerate() {
        if r.probability > s.rows[best].probability {
            best = i;
        }
    }
    best
}

/// Highest Fock level kept: `n_bar + 8 sqrt(n_bar) + 16`.
pub fn fock_cutoff(n_bar: f64) -> usize {
    (n_bar + 8.0 * n_bar.sqrt() + 16.0).ceil() as usize
}

/// `e^{-n/2} n^{k/2} / sqrt(k!)` for `k = 0..=cutoff`, normalized.
fn coherent_amplitudes(n_bar: f64, cutoff: usize) -> Vec<f64> {
    let mut c = vec![0.0; cutoff + 1];
    c[0] = (-0.5 * n_bar).exp();
    for k in 1..=cutoff {
        c[k] = c[k - 1] * (n_bar / k as f64).sqrt();
    }
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter().map(|x| x / norm).collect()
}

fn moments(s: &BornSpectrum) -> (f64, f64) {
    let total = s.total();
    let mean = s.expectation(|v| v[0]) / total;
    let var = s.expectation(|v| (v[0] - mean).powi(2)) / total;
    (mean, var)
}

pub fn correspondence_demo(params: &CorrespondenceParams) -> Result<CorrespondenceOutcome> {
    let Oscillator { mass, omega } = params.oscillator;
    let hbar = params.hbar;
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::NonPositiveParameter { name: "hbar", value: hbar });
    }
    if !(params.n_bar >= 0.0 && params.n_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!("n_bar = {}", params.n_bar)));
    }
    let quantum_of_energy = hbar * omega;
    let cutoff = fock_cutoff(params.n_bar);
    let levels = cutoff + 1;

    // quantum side through the eigendensity pipeline
    let energies: Vec<f64> = (0..levels).map(|n| quantum_of_energy * (n as f64 + 0.5)).collect();
    let h = Observable::diagonal("H", &energies);
    let tol = crate::quantum::QuantumTolerances::default();
    let joint = joint_spectrum(std::slice::from_ref(&h), &tol)?;
    let basis = eigendensity_basis(&joint, hbar)?;
    let amps = coherent_amplitudes(params.n_bar, cutoff);
    let psi = DVector::from_iterator(levels, amps.iter().map(|&a| C64::new(a, 0.0)));
    let rho = QuantumDensity::pure(&psi)?;
    let table = born_spectrum_quantum(&rho, &basis, false)?;
    let quantum = BornSpectrum::new(
        table.source,
        vec!["E".into()],
        table
            .rows
            .iter()
            .map(|r| SpectrumRow {
                values: r.values.clone(),
                width: quantum_of_energy,
                probability: r.probability,
            })
            .collect(),
    );
    let poisson_residual = quantum
        .rows
        .iter()
        .zip(&amps)
        .map(|(r, a)| (r.probability - a * a).abs())
        .fold(0.0, f64::max);

    // classical side through the Koopman pipeline, action cells of width hbar
    let chart = HarmonicChart::new(&[(mass, omega)])?;
    let q0 = (2.0 * hbar * params.n_bar / (mass * omega)).sqrt();
    let sigma_q = (hbar / (2.0 * mass * omega)).sqrt();
    let sigma_p = (mass * omega * hbar / 2.0).sqrt();
    let rho_c = PhaseSpaceDensity::gaussian(&[0.0], &[q0], &[sigma_p], &[sigma_q])?;
    let rho_k = pushforward_density(&rho_c, Arc::new(chart))?;
    let grid = GridSpec::uniform_bins(0.0, levels as f64 * hbar, levels)?;
    let action = born_spectrum_classical(&rho_k, &grid, &ClassicalQuadrature::for_lambda_max(params.lambda_max))?;
    let classical = BornSpectrum::new(
        action.source,
        vec!["E".into()],
        action
            .rows
            .iter()
            .map(|r| SpectrumRow {
                values: vec![omega * r.values[0]],
                width: quantum_of_energy,
                probability: r.probability,
            })
            .collect(),
    );

    let (quantum_mean, quantum_variance) = moments(&quantum);
    let (classical_mean, classical_variance) = moments(&classical);
    Ok(CorrespondenceOutcome {
        quantum,
        classical,
        analytic_mean: quantum_of_energy * (params.n_bar + 0.5),
        quantum_mean,
        classical_mean,
        quantum_variance,
        classical_variance,
        poisson_residual,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n_bar: f64) -> CorrespondenceParams {
        CorrespondenceParams {
            oscillator: Oscillator { mass: 1.0, omega: 1.0 },
            hbar: 1.0,
            n_bar,
            lambda_max: 32,
        }
    }

    #[test]
    fn twenty_quanta() {
        let o = correspondence_demo(&params(20.0)).unwrap();
        assert!(o.relative_mean_difference() <= 0.05);
        assert!((o.quantum_mean - 20.5).abs() < 1e-10);
        assert!((o.classical_mean - 20.5).abs() < 1e-6);
        assert!((o.quantum_variance - 20.0).abs() < 1e-8);
        // binning a smooth law adds w^2 / 12 to its variance
        assert!((o.classical_variance - (20.25 + 1.0 / 12.0)).abs() < 1e-3, "{}", o.classical_variance);
        assert!(o.poisson_residual < 1e-14);
        assert!((o.quantum.total() - 1.0).abs() < 1e-13);
        assert!((o.classical.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vacuum_peaks_in_lowest_bin() {
        let o = correspondence_demo(&params(0.0)).unwrap();
        assert_eq!(o.quantum_peak(), 0);
        assert_eq!(o.classical_peak(), 0);
        assert_eq!(o.quantum.rows[0].probability, 1.0);
        // the classical energy law is exponential with mean hbar w / 2
        assert!((o.classical.rows[0].probability - (1.0 - (-2.0f64).exp())).abs() < 1e-9);
        assert!(o.relative_variance_difference().is_none());
    }

    #[test]
    fn mean_gap_does_not_grow() {
        let gaps: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&n| correspondence_demo(&params(n)).unwrap().relative_mean_difference())
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{gaps:?}");
        }
    }

    #[test]
    fn scaled_units() {
        let p = CorrespondenceParams {
            oscillator: Oscillator { mass: 2.0, omega: 0.5 },
            hbar: 0.5,
            n_bar: 10.0,
            lambda_max: 32,
        };
        let o = correspondence_demo(&p).unwrap();
        assert!((o.analytic_mean - 0.25 * 10.5).abs() < 1e-15);
        assert!((o.quantum_mean - o.analytic_mean).abs() < 1e-10);
        assert!((o.classical_mean - o.analytic_mean).abs() < 1e-6);
        assert!((o.relative_variance_difference().unwrap() - 1.0 / 40.0).abs() < 0.01);
    }
}
