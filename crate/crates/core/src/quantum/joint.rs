//! Simultaneous eigenbasis of a commuting set of observables.

use nalgebra::DMatrix;

use super::observable::{commutator_norm, Observable};
use super::QuantumTolerances;
use crate::error::{Error, Result};
use crate::numerics::eigen::{check_hermitian, fix_phase, hermitian_eigendecomposition, max_abs};
use crate::numerics::C64;

/// Joint eigenvectors `|K'>` with their eigenvalue vectors.
#[derive(Debug, Clone)]
pub struct JointEigenbasis {
    /// Column `m` is `|kappa_m>`.
    pub vectors: DMatrix<C64>,
    /// `values[m][i]` is the eigenvalue of observable `i` on vector `m`.
    pub values: Vec<Vec<f64>>,
    /// Indices sharing one eigenvalue vector, in basis order.
    pub degeneracy_groups: Vec<Vec<usize>>,
    pub labels: Vec<String>,
    /// Absolute clustering tolerance per observable.
    pub cluster_tolerances: Vec<f64>,
}

impl JointEigenbasis {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn observables(&self) -> usize {
        self.labels.len()
    }

    pub fn vector(&self, m: usize) -> nalgebra::DVectorView<'_, C64> {
        self.vectors.column(m)
    }

    /// `max |V^H V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.vectors.adjoint() * &self.vectors - DMatrix::<C64>::identity(d, d)))
    }

    /// `max_{i,m} |K_i v_m - kappa_{m,i} v_m|`.
    pub fn eigen_residual(&self, observables: &[Observable]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, obs) in observables.iter().enumerate() {
            for m in 0..self.dim() {
                let v = self.vectors.column(m);
                let r = &obs.matrix * v - v * C64::new(self.values[m][i], 0.0);
                worst = worst.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// Groups sorted-by-value entries whose neighbours differ by at most `tol`.
/// Returns a cluster id per input, ids increasing with value.
pub fn cluster_ids(values: &[f64], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ids = vec![0; values.len()];
    let mut current = 0;
    for w in 0..order.len() {
        if w > 0 && values[order[w]] - values[order[w - 1]] > tol {
            current += 1;
        }
        ids[order[w]] = current;
    }
    ids
}

fn spectral_scale(m: &DMatrix<C64>) -> f64 {
    // row-sum bound on the spectral radius
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0)
}

/// Simultaneous eigenbasis of `observables`.
///
/// The basis is refined observable by observable: each current degenerate
/// subspace is diagonalized under the next observable and split where its
/// eigenvalues separate. Vectors are then phase-fixed and ordered
/// lexicographically by their (clustered) eigenvalue vectors, ties by index.
pub fn joint_spectrum(observables: &[Observable], tol: &QuantumTolerances) -> Result<JointEigenbasis> {
    let first = observables
        .first()
        .ok_or_else(|| Error::InvalidParameter("no observables given".into()))?;
    let d = first.dim();
    for obs in observables {
        if obs.dim() != d || !obs.matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: obs.matrix.nrows(),
            });
        }
        check_hermitian(&obs.matrix, tol.hermiticity)?;
    }
    for (i, a) in observables.iter().enumerate() {
        for b in &observables[i + 1..] {
            let norm = commutator_norm(&a.matrix, &b.matrix);
            let scale = max_abs(&a.matrix).max(1.0) * max_abs(&b.matrix).max(1.0);
            if norm > tol.commutation * scale {
                return Err(Error::NonCommuting {
                    first: a.label.clone(),
                    second: b.label.clone(),
                    norm,
                });
            }
        }
    }

    let cluster_tolerances: Vec<f64> = observables
        .iter()
        .map(|o| tol.degeneracy * spectral_scale(&o.matrix))
        .collect();

    // list of subspaces, each a d x k block of orthonormal columns
    let mut blocks: Vec<DMatrix<C64>> = vec![DMatrix::identity(d, d)];
    for (obs, &ctol) in observables.iter().zip(&cluster_tolerances) {
        let mut refined = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.ncols() == 1 {
                refined.push(block);
                continue;
            }
            let restricted = block.adjoint() * &obs.matrix * &block;
            let eig = hermitian_eigendecomposition(&restricted, tol.hermiticity)
                .map_err(|e| Error::EigensolverFailure(format!("{}: {e}", obs.label)))?;
            let rotated = &block * &eig.vectors;
            let ids = cluster_ids(eig.values.as_slice(), ctol);
            let groups = ids.iter().copied().max().map_or(0, |m| m + 1);
            for g in 0..groups {
                let cols: Vec<usize> = (0..ids.len()).filter(|&c| ids[c] == g).collect();
                refined.push(rotated.select_columns(&cols));
            }
        }
        blocks = refined;
    }

    let mut columns: Vec<Vec<C64>> = blocks
        .iter()
        .flat_map(|b| b.column_iter().map(|c| c.iter().copied().collect::<Vec<_>>()))
        .collect();
    if columns.len() != d {
        return Err(Error::EigensolverFailure(format!(
            "refinement produced {} vectors for dimension {d}",
            columns.len()
        )));
    }
    for col in &mut columns {
        fix_phase(col);
    }
    let raw = DMatrix::from_fn(d, d, |r, c| columns[c][r]);

    let values: Vec<Vec<f64>> = (0..d)
        .map(|m| {
            let v = raw.column(m);
            observables
                .iter()
                .map(|o| (v.adjoint() * &o.matrix * v)[(0, 0)].re)
                .collect()
        })
        .collect();

    // clustered keys for a transitive lexicographic order
    let keys: Vec<Vec<usize>> = {
        let per_obs: Vec<Vec<usize>> = (0..observables.len())
            .map(|i| {
                let col: Vec<f64> = values.iter().map(|v| v[i]).collect();
                cluster_ids(&col, cluster_tolerances[i])
            })
            .collect();
        (0..d)
            .map(|m| per_obs.iter().map(|ids| ids[m]).collect())
            .collect()
    };
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));

    let vectors = DMatrix::from_fn(d, d, |r, c| raw[(r, order[c])]);
    let sorted_values: Vec<Vec<f64>> = order.iter().map(|&m| values[m].clone()).collect();
    let sorted_keys: Vec<&Vec<usize>> = order.iter().map(|&m| &keys[m]).collect();

    let mut degeneracy_groups: Vec<Vec<usize>> = Vec::new();
    for m in 0..d {
        match degeneracy_groups.last_mut() {
            Some(g) if sorted_keys[g[0]] == sorted_keys[m] => g.push(m),
            _ => degeneracy_groups.push(vec![m]),
        }
    }

    Ok(JointEigenbasis {
        vectors,
        values: sorted_values,
        degeneracy_groups,
        labels: observables.iter().map(|o| o.label.clone()).collect(),
        cluster_tolerances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::observable::random;
    use nalgebra::DVector;

    fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a.kronecker(b)
    }

    fn sigma_z() -> DMatrix<C64> {
        Observable::diagonal("z", &[1.0, -1.0]).matrix
    }

    #[test]
    fn already_diagonal() {
        let k = Observable::diagonal("K", &[2.0, 1.0]);
        let b = joint_spectrum(&[k], &QuantumTolerances::default()).unwrap();
        assert_eq!(b.values, vec![vec![1.0], vec![2.0]]);
        // sorted order swaps the two basis vectors
        assert!((b.vectors[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((b.vectors[(0, 1)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(b.degeneracy_groups, vec![vec![0], vec![1]]);
    }

    #[test]
    fn two_qubit_product_basis() {
        let id = DMatrix::<C64>::identity(2, 2);
        let z1 = Observable::new("Z1", kron(&sigma_z(), &id), 1e-12).unwrap();
        let z2 = Observable::new("Z2", kron(&id, &sigma_z()), 1e-12).unwrap();
        let b = joint_spectrum(&[z1.clone(), z2.clone()], &QuantumTolerances::default()).unwrap();
        assert_eq!(
            b.values,
            vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]
        );
        // each vector is a computational basis state
        for m in 0..4 {
            let ones = b.vector(m).iter().filter(|z| (z.norm() - 1.0).abs() < 1e-14).count();
            assert_eq!(ones, 1);
        }
        assert!(b.eigen_residual(&[z1, z2]) < 1e-14);
        assert_eq!(b.degeneracy_groups.len(), 4);
    }

    #[test]
    fn random_commuting_pair_d6() {
        // shared random eigenbasis; K1 is degenerate so K2 must split it
        let mut rng = random::rng(17);
        let u = random::unitary(6, &mut rng);
        let a = [1.0, 1.0, 1.0, -0.5, -0.5, 2.0];
        let c = [0.3, -1.2, 0.7, 0.3, 2.2, -0.4];
        let build = |vals: &[f64]| {
            let d = DMatrix::from_diagonal(&DVector::from_iterator(6, vals.iter().map(|&x| C64::new(x, 0.0))));
            let m = &u * d * u.adjoint();
            (&m + m.adjoint()) * C64::new(0.5, 0.0)
        };
        let k1 = Observable::new("K1", build(&a), 1e-12).unwrap();
        let k2 = Observable::new("K2", build(&c), 1e-12).unwrap();
        let b = joint_spectrum(&[k1.clone(), k2.clone()], &QuantumTolerances::default()).unwrap();
        assert!(b.eigen_residual(&[k1, k2]) <= 1e-10);
        assert!(b.orthonormality_residual() <= 1e-12);
        let mut expected: Vec<(f64, f64)> = a.iter().copied().zip(c.iter().copied()).collect();
        expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in b.values.iter().zip(&expected) {
            assert!((got[0] - want.0).abs() < 1e-10 && (got[1] - want.1).abs() < 1e-10);
        }
        assert_eq!(b.degeneracy_groups.len(), 6);
    }

    #[test]
    fn degenerate_single_observable_groups() {
        let k = Observable::diagonal("K", &[1.0, 0.0, 1.0]);
        let b = joint_spectrum(&[k], &QuantumTolerances::default()).unwrap();
        assert_eq!(b.degeneracy_groups, vec![vec![0], vec![1, 2]]);
    }

    #[test]
    fn non_commuting_pair_is_reported() {
        let x = Observable::new(
            "X",
            DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
            1e-12,
        )
        .unwrap();
        let z = Observable::diagonal("Z", &[1.0, -1.0]);
        match joint_spectrum(&[x, z], &QuantumTolerances::default()) {
            Err(Error::NonCommuting { first, second, norm }) => {
                assert_eq!((first.as_str(), second.as_str()), ("X", "Z"));
                assert!((norm - 2.0).abs() < 1e-12);
            }
            other => panic!("expected NonCommuting, got {other:?}"),
        }
    }

    #[test]
    fn cluster_ids_merge_close_values() {
        assert_eq!(cluster_ids(&[1.0, 3.0, 1.0 + 1e-12, 2.0], 1e-9), vec![0, 2, 0, 1]);
    }
}
