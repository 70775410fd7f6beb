//! Dense Hermitian eigendecomposition with a reproducible output convention.
//!
//! The heavy lifting is nalgebra's tridiagonal QR solver. On top of it this
//! module enforces ascending eigenvalues, a stable order for ties, and a
//! phase convention (largest-magnitude component of every eigenvector is
//! real and positive) so that downstream coefficient tables are bit-stable.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative slack when choosing the "largest" component for phase fixing.
/// Components within this fraction of the maximum are treated as tied and
/// the first one wins.
const PHASE_TIE_SLACK: f64 = 1e-9;

const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: DMatrix<C64>,
}

/// Largest entry modulus.
pub fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |A - A^H|`.
pub fn hermiticity_deviation(a: &DMatrix<C64>) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(a - a.adjoint()))
}

/// Checks `A` against `A^H` with a tolerance scaled by `max(1, |A|_max)`.
pub fn check_hermitian(a: &DMatrix<C64>, tolerance: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let scaled = tolerance * max_abs(a).max(1.0);
    let deviation = hermiticity_deviation(a);
    if deviation > scaled {
        return Err(Error::NonHermitian {
            deviation,
            tolerance: scaled,
        });
    }
    Ok(())
}

/// Rotates `v` so its largest-magnitude component is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let largest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= largest * (1.0 - PHASE_TIE_SLACK))
        .expect("non-empty vector with positive norm");
    let phase = v[pivot] / v[pivot].norm();
    let rot = phase.conj();
    for z in v.iter_mut() {
        *z *= rot;
    }
    // exact zero imaginary part on the pivot
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
}

/// Phase-fixes every column of `m`.
pub fn fix_column_phases(m: &mut DMatrix<C64>) {
    for mut col in m.column_iter_mut() {
        let mut buf: Vec<C64> = col.iter().copied().collect();
        fix_phase(&mut buf);
        for (dst, src) in col.iter_mut().zip(buf) {
            *dst = src;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Values come back ascending (ties keep the solver's column order) and the
/// vectors are phase-fixed. The input is symmetrized as `(A + A^H)/2` after
/// the Hermiticity check so that roundoff asymmetry never leaks into the
/// solver.
pub fn hermitian_eigendecomposition(a: &DMatrix<C64>, tolerance: f64) -> Result<HermitianEigen> {
    check_hermitian(a, tolerance)?;
    let dim = a.nrows();
    if dim == 0 {
        return Ok(HermitianEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure { dim })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .total_cmp(&eig.eigenvalues[j])
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    fix_column_phases(&mut vectors);
    Ok(HermitianEigen { values, vectors })
}

impl HermitianEigen {
    /// `max |A - V diag(values) V^H|`.
    pub fn reconstruction_residual(&self, a: &DMatrix<C64>) -> f64 {
        let diag = DMatrix::from_diagonal(&self.values.map(|x| C64::new(x, 0.0)));
        max_abs(&(a - &self.vectors * diag * self.vectors.adjoint()))
    }

    /// `max |V^H V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.vectors.ncols();
        max_abs(&(self.vectors.adjoint() * &self.vectors - DMatrix::<C64>::identity(n, n)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_hermitian(d: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&g + g.adjoint()) * c(0.5)
    }

    #[test]
    fn diagonal_input_sorts_values() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0), c(1.0), c(2.0)]));
        let e = hermitian_eigendecomposition(&a, 1e-12).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0, 3.0]);
        // column k is the basis vector of the k-th smallest entry
        let expected_rows = [1, 2, 0];
        for (col, &row) in expected_rows.iter().enumerate() {
            assert!((e.vectors[(row, col)] - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_yields_standard_basis() {
        let a = DMatrix::<C64>::identity(4, 4);
        let e = hermitian_eigendecomposition(&a, 1e-12).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(max_abs(&(e.vectors - DMatrix::<C64>::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn random_d16_reconstructs() {
        let a = random_hermitian(16, 7);
        let e = hermitian_eigendecomposition(&a, 1e-12).unwrap();
        assert!(e.reconstruction_residual(&a) <= 1e-11 * max_abs(&a));
        assert!(e.orthonormality_residual() <= 1e-12);
        assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn d64_reconstruction_bound() {
        let a = random_hermitian(64, 11);
        let e = hermitian_eigendecomposition(&a, 1e-12).unwrap();
        assert!(e.reconstruction_residual(&a) <= 1e-11 * max_abs(&a));
        assert!(e.orthonormality_residual() <= 1e-12);
    }

    #[test]
    fn phase_convention_is_applied_and_stable() {
        let a = random_hermitian(6, 3);
        let e1 = hermitian_eigendecomposition(&a, 1e-12).unwrap();
        let e2 = hermitian_eigendecomposition(&a, 1e-12).unwrap();
        assert_eq!(e1.vectors, e2.vectors);
        for col in e1.vectors.column_iter() {
            let largest = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = col
                .iter()
                .find(|z| z.norm() >= largest * (1.0 - PHASE_TIE_SLACK))
                .unwrap();
            assert_eq!(pivot.im, 0.0);
            assert!(pivot.re > 0.0);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = DMatrix::<C64>::identity(2, 2);
        a[(0, 1)] = c(1.0);
        assert!(matches!(
            hermitian_eigendecomposition(&a, 1e-12),
            Err(Error::NonHermitian { .. })
        ));
    }
}
