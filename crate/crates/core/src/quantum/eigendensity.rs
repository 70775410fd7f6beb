//! Eigendensities `rho_{m,n} = |m><n|` of the commuting superoperator set
//! and the expansion of a density matrix in them.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::joint::JointEigenbasis;
use super::observable::{Observable, QuantumDensity};
use super::superop::{anticommutator, commutator};
use crate::error::{Error, Result};
use crate::numerics::eigen::max_abs;
use crate::numerics::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct EigendensityEntry {
    pub m: usize,
    pub n: usize,
    /// `(kappa_m + kappa_n) / 2`, eigenvalues of the anticommutator maps.
    pub alpha: Vec<f64>,
    /// `(kappa_m - kappa_n) / hbar`, eigenvalues of the commutator maps.
    pub beta: Vec<f64>,
}

impl EigendensityEntry {
    /// Diagonal entries are the projectors `|K'><K'|`.
    pub fn is_projector(&self) -> bool {
        self.m == self.n
    }
}

/// All `d^2` eigendensities, ordered row-major in `(m, n)`.
#[derive(Debug, Clone)]
pub struct EigendensityBasis {
    pub basis: JointEigenbasis,
    pub entries: Vec<EigendensityEntry>,
    pub hbar: f64,
}

pub fn eigendensity_basis(basis: &JointEigenbasis, hbar: f64) -> Result<EigendensityBasis> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "hbar",
            value: hbar,
        });
    }
    let d = basis.dim();
    let mut entries = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let (km, kn) = (&basis.values[m], &basis.values[n]);
            let alpha = km.iter().zip(kn).map(|(a, b)| 0.5 * (a + b)).collect();
            let beta = if m == n {
                vec![0.0; km.len()]
            } else {
                km.iter().zip(kn).map(|(a, b)| (a - b) / hbar).collect()
            };
            entries.push(EigendensityEntry { m, n, alpha, beta });
        }
    }
    Ok(EigendensityBasis {
        basis: basis.clone(),
        entries,
        hbar,
    })
}

impl EigendensityBasis {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `|m><n|` as a matrix.
    pub fn matrix(&self, m: usize, n: usize) -> DMatrix<C64> {
        let vm = self.basis.vectors.column(m);
        let vn = self.basis.vectors.column(n);
        vm * vn.adjoint()
    }

    pub fn entry(&self, m: usize, n: usize) -> &EigendensityEntry {
        &self.entries[m * self.dim() + n]
    }

    /// Liouville inner product `Tr[rho rho_{m,n}^H] = sum_ij rho_ij conj((|m><n|)_ij)`.
    pub fn overlap(&self, rho: &DMatrix<C64>, m: usize, n: usize) -> C64 {
        let d = self.dim();
        let vm = self.basis.vectors.column(m);
        let vn = self.basis.vectors.column(n);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..d {
            let conj_col = vn[j];
            for i in 0..d {
                // conj(vm[i] * conj(vn[j])) = conj(vm[i]) * vn[j]
                acc += rho[(i, j)] * vm[i].conj() * conj_col;
            }
        }
        acc
    }

    /// Largest residual of the anticommutator and commutator eigen-relations
    /// over all entries and observables.
    pub fn superoperator_residual(&self, observables: &[Observable]) -> f64 {
        let mut worst: f64 = 0.0;
        for e in &self.entries {
            let rho = self.matrix(e.m, e.n);
            for (i, obs) in observables.iter().enumerate() {
                let a = anticommutator(&obs.matrix, &rho) - &rho * C64::new(e.alpha[i], 0.0);
                let c = commutator(&obs.matrix, &rho, self.hbar) - &rho * C64::new(e.beta[i], 0.0);
                worst = worst.max(max_abs(&a)).max(max_abs(&c));
            }
        }
        worst
    }

    /// `max |Tr[rho_a rho_b^H] - delta_ab|` over all `d^4` pairs.
    pub fn gram_residual(&self) -> f64 {
        let d = self.dim();
        let mats: Vec<DMatrix<C64>> = self.entries.iter().map(|e| self.matrix(e.m, e.n)).collect();
        let mut worst: f64 = 0.0;
        for (a, ma) in mats.iter().enumerate() {
            for (b, mb) in mats.iter().enumerate() {
                let ip = (ma * mb.adjoint()).trace();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ip - C64::new(target, 0.0)).norm());
            }
        }
        debug_assert_eq!(mats.len(), d * d);
        worst
    }
}

/// Expansion coefficients keyed by `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub dim: usize,
    pub coefficients: BTreeMap<(usize, usize), C64>,
}

impl CoefficientTable {
    pub fn get(&self, m: usize, n: usize) -> Option<C64> {
        self.coefficients.get(&(m, n)).copied()
    }

    /// `sum |D|^2`.
    pub fn squared_norm(&self) -> f64 {
        self.coefficients.values().map(|z| z.norm_sqr()).sum()
    }
}

pub fn expand_density(rho: &QuantumDensity, basis: &EigendensityBasis) -> Result<CoefficientTable> {
    let d = basis.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    let coefficients = basis
        .entries
        .iter()
        .map(|e| ((e.m, e.n), basis.overlap(&rho.matrix, e.m, e.n)))
        .collect();
    Ok(CoefficientTable {
        dim: d,
        coefficients,
    })
}

/// `sum_{m,n} D_{m,n} |m><n|`. The result is returned as a raw matrix since
/// arbitrary coefficient tables need not describe a valid state.
pub fn reconstruct_density(coeffs: &CoefficientTable, basis: &EigendensityBasis) -> Result<DMatrix<C64>> {
    let d = basis.dim();
    if coeffs.dim != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: coeffs.dim,
        });
    }
    let mut out = DMatrix::<C64>::zeros(d, d);
    for m in 0..d {
        let vm: DVector<C64> = basis.basis.vectors.column(m).into_owned();
        for n in 0..d {
            let c = coeffs
                .get(m, n)
                .ok_or_else(|| Error::IncompleteTable(format!("({m}, {n})")))?;
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let vn = basis.basis.vectors.column(n);
            out += &vm * vn.adjoint() * c;
        }
    }
    Ok(out)
}
