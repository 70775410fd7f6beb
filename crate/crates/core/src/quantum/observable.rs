use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::QuantumTolerances;
use crate::error::{Error, Result};
use crate::numerics::eigen::{check_hermitian, hermitian_eigendecomposition, max_abs};
use crate::numerics::C64;

/// A Hermitian operator on a `d`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub label: String,
    pub matrix: DMatrix<C64>,
}

impl Observable {
    pub fn new(label: impl Into<String>, matrix: DMatrix<C64>, tolerance: f64) -> Result<Self> {
        check_hermitian(&matrix, tolerance)?;
        Ok(Self {
            label: label.into(),
            matrix,
        })
    }

    pub fn diagonal(label: impl Into<String>, values: &[f64]) -> Self {
        let diag = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        Self {
            label: label.into(),
            matrix: DMatrix::from_diagonal(&diag),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `max |[A, B]|`.
pub fn commutator_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    max_abs(&(a * b - b * a))
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDensity {
    pub matrix: DMatrix<C64>,
}

impl QuantumDensity {
    pub fn new(matrix: DMatrix<C64>, tol: &QuantumTolerances) -> Result<Self> {
        check_hermitian(&matrix, tol.hermiticity).map_err(|e| Error::InvalidDensity(e.to_string()))?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {trace} is not 1")));
        }
        let eig = hermitian_eigendecomposition(&matrix, tol.hermiticity)?;
        let smallest = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if smallest < -tol.psd {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {smallest:e} is negative"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` after normalizing `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidDensity("state vector has zero norm".into()));
        }
        let v = psi / C64::new(norm, 0.0);
        Ok(Self {
            matrix: &v * v.adjoint(),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Seeded random states and operators for sweeps and tests.
pub mod random {
    use super::*;

    /// Hermitian matrix `(G + G^H)/2` from a complex Ginibre `G`.
    pub fn hermitian(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        let g = DMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
        (&g + g.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Haar-random unit vector.
    pub fn state_vector(dim: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
        let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let n = v.norm();
        v / C64::new(n, 0.0)
    }

    /// Haar-random unitary from the eigenvectors of a random Hermitian
    /// matrix.
    pub fn unitary(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        let h = hermitian(dim, rng);
        hermitian_eigendecomposition(&h, 1e-10)
            .expect("symmetrized Ginibre matrix is Hermitian")
            .vectors
    }

    pub fn pure_density(dim: usize, rng: &mut ChaCha8Rng) -> QuantumDensity {
        QuantumDensity::pure(&state_vector(dim, rng)).expect("unit vector")
    }

    /// Full-rank mixed state `G G^H / Tr`.
    pub fn mixed_density(dim: usize, rng: &mut ChaCha8Rng) -> QuantumDensity {
        let g = DMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
        let m = &g * g.adjoint();
        let t = m.trace();
        let mut matrix = m / t;
        // exact Hermiticity after the division
        matrix = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        QuantumDensity { matrix }
    }

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}
