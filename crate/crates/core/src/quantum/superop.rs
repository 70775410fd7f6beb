//! Matrix representations of the anticommutator and commutator
//! superoperators on column-stacked operators.
//!
//! With `vec(X)[i + j d] = X[i, j]` we have `vec(K X) = (I (x) K) vec(X)` and
//! `vec(X K) = (K^T (x) I) vec(X)`.

use nalgebra::{DMatrix, DVector};

use super::observable::Observable;
use crate::error::{Error, Result};
use crate::numerics::eigen::{check_hermitian, hermitian_eigendecomposition};
use crate::numerics::C64;

/// Column-stacking vectorization.
pub fn vectorize(x: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vectorize`] for a `d x d` operator.
pub fn unvectorize(v: &DVector<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// The pair of superoperator matrices.
#[derive(Debug, Clone)]
pub struct Superoperators {
    /// `X -> (K X + X K) / 2`.
    pub anticommutator: DMatrix<C64>,
    /// `X -> (K X - X K) / hbar`.
    pub commutator: DMatrix<C64>,
}

pub fn build_superoperators(k: &Observable, hbar: f64, tolerance: f64) -> Result<Superoperators> {
    check_hermitian(&k.matrix, tolerance)?;
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::NonPositiveParameter {
            name: "hbar",
            value: hbar,
        });
    }
    let d = k.dim();
    let id = DMatrix::<C64>::identity(d, d);
    let left = id.kronecker(&k.matrix);
    let right = k.matrix.transpose().kronecker(&id);
    Ok(Superoperators {
        anticommutator: (&left + &right) * C64::new(0.5, 0.0),
        commutator: (&left - &right) * C64::new(1.0 / hbar, 0.0),
    })
}

/// Largest gap between the sorted eigenvalues of both superoperator
/// matrices and the predicted sets `(k_m + k_n) / 2` and `(k_m - k_n) / hbar`
/// built from the eigenvalues `kappa` of `K`.
pub fn spectrum_law_residual(ops: &Superoperators, kappa: &[f64], hbar: f64, tolerance: f64) -> Result<f64> {
    let mut sums = Vec::with_capacity(kappa.len() * kappa.len());
    let mut diffs = Vec::with_capacity(kappa.len() * kappa.len());
    for &a in kappa {
        for &b in kappa {
            sums.push(0.5 * (a + b));
            diffs.push((a - b) / hbar);
        }
    }
    let mut worst: f64 = 0.0;
    for (matrix, mut predicted) in [(&ops.anticommutator, sums), (&ops.commutator, diffs)] {
        let found = hermitian_eigendecomposition(matrix, tolerance)?.values;
        if found.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: predicted.len(),
                found: found.len(),
            });
        }
        predicted.sort_by(f64::total_cmp);
        for (x, y) in found.iter().zip(&predicted) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// `(K X + X K) / 2` applied directly.
pub fn anticommutator(k: &DMatrix<C64>, x: &DMatrix<C64>) -> DMatrix<C64> {
    (k * x + x * k) * C64::new(0.5, 0.0)
}

/// `(K X - X K) / hbar` applied directly.
pub fn commutator(k: &DMatrix<C64>, x: &DMatrix<C64>, hbar: f64) -> DMatrix<C64> {
    (k * x - x * k) * C64::new(1.0 / hbar, 0.0)
}
