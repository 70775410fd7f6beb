//! Born-rule spectra on the quantum side: from eigendensity coefficients
//! and, independently, straight from the eigenvectors.

use super::eigendensity::EigendensityBasis;
use super::joint::{cluster_ids, JointEigenbasis};
use super::observable::QuantumDensity;
use crate::error::{Error, Result};
use crate::spectrum::{BornSpectrum, Pipeline, SpectrumRow};

fn check_dim(rho: &QuantumDensity, d: usize) -> Result<()> {
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    Ok(())
}

fn discrete_row(values: Vec<f64>, probability: f64) -> SpectrumRow {
    SpectrumRow {
        values,
        width: 1.0,
        probability,
    }
}

/// Probability of each joint eigenvalue as the coefficient of `rho` along
/// the projector eigendensity `rho_{K',0} = |K'><K'|`.
///
/// With `sum_degeneracies` the rows are merged over the leading `N - 1`
/// labels, leaving one row per distinct value of the last observable.
pub fn born_spectrum_quantum(
    rho: &QuantumDensity,
    basis: &EigendensityBasis,
    sum_degeneracies: bool,
) -> Result<BornSpectrum> {
    check_dim(rho, basis.dim())?;
    let joint = &basis.basis;
    let rows: Vec<SpectrumRow> = basis
        .entries
        .iter()
        .filter(|e| e.is_projector() && e.beta.iter().all(|&b| b == 0.0))
        .map(|e| discrete_row(joint.values[e.m].clone(), basis.overlap(&rho.matrix, e.m, e.m).re))
        .collect();
    let spectrum = BornSpectrum::new(
        Pipeline::QuantumEigendensity,
        joint.labels.clone(),
        rows,
    );
    if sum_degeneracies {
        Ok(merge_over_leading_labels(spectrum, joint))
    } else {
        Ok(spectrum)
    }
}

/// `<K'|rho|K'>` from the eigenvectors, without any superoperator
/// machinery.
pub fn direct_born_oracle(rho: &QuantumDensity, basis: &JointEigenbasis) -> Result<BornSpectrum> {
    check_dim(rho, basis.dim())?;
    let rows = (0..basis.dim())
        .map(|m| {
            let v = basis.vectors.column(m);
            let p = (v.adjoint() * &rho.matrix * v)[(0, 0)].re;
            discrete_row(basis.values[m].clone(), p)
        })
        .collect();
    Ok(BornSpectrum::new(Pipeline::QuantumDirect, basis.labels.clone(), rows))
}

/// Sums rows sharing the last eigenvalue (clustered with the basis
/// tolerance). Each merged row carries the mean of its members' last values.
pub fn merge_over_leading_labels(spectrum: BornSpectrum, basis: &JointEigenbasis) -> BornSpectrum {
    let Some(last) = basis.labels.len().checked_sub(1) else {
        return spectrum;
    };
    let tol = basis.cluster_tolerances[last];
    let lasts: Vec<f64> = spectrum.rows.iter().map(|r| r.values[last]).collect();
    let ids = cluster_ids(&lasts, tol);
    let groups = ids.iter().copied().max().map_or(0, |m| m + 1);
    let rows = (0..groups)
        .map(|g| {
            let members: Vec<usize> = (0..ids.len()).filter(|&i| ids[i] == g).collect();
            let value = members.iter().map(|&i| lasts[i]).sum::<f64>() / members.len() as f64;
            let p = members.iter().map(|&i| spectrum.rows[i].probability).sum();
            discrete_row(vec![value], p)
        })
        .collect();
    BornSpectrum {
        rows,
        degeneracies_summed: true,
        source: spectrum.source,
        labels: vec![basis.labels[last].clone()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::eigendensity::eigendensity_basis;
    use crate::quantum::joint::joint_spectrum;
    use crate::quantum::observable::{random, Observable};
    use crate::quantum::QuantumTolerances;
    use crate::numerics::C64;
    use nalgebra::{DMatrix, DVector};

    fn build(obs: &[Observable]) -> EigendensityBasis {
        let jb = joint_spectrum(obs, &QuantumTolerances::default()).unwrap();
        eigendensity_basis(&jb, 1.0).unwrap()
    }

    #[test]
    fn equal_superposition_two_level() {
        let b = build(&[Observable::diagonal("K", &[1.0, 2.0])]);
        let psi = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let rho = QuantumDensity::pure(&psi).unwrap();
        let s = born_spectrum_quantum(&rho, &b, false).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].values, vec![1.0]);
        assert!((s.rows[0].probability - 0.5).abs() < 1e-15);
        assert!((s.rows[1].probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let mut rng = random::rng(1);
        let k = Observable::new("K", random::hermitian(3, &mut rng), 1e-12).unwrap();
        let b = build(&[k]);
        let rho = QuantumDensity::maximally_mixed(3);
        for s in [
            born_spectrum_quantum(&rho, &b, false).unwrap(),
            direct_born_oracle(&rho, &b.basis).unwrap(),
        ] {
            assert!(s.rows.iter().all(|r| (r.probability - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn two_qubit_summed_over_first_label() {
        let id = DMatrix::<C64>::identity(2, 2);
        let z = Observable::diagonal("z", &[1.0, -1.0]).matrix;
        let z1 = Observable::new("K_1", z.kronecker(&id), 1e-12).unwrap();
        let z2 = Observable::new("K_2", id.kronecker(&z), 1e-12).unwrap();
        let b = build(&[z1, z2]);
        let psi = DVector::from_element(4, C64::new(0.5, 0.0));
        let rho = QuantumDensity::pure(&psi).unwrap();
        let s = born_spectrum_quantum(&rho, &b, true).unwrap();
        assert!(s.degeneracies_summed);
        assert_eq!(s.labels, vec!["K_2".to_string()]);
        assert_eq!(s.rows.len(), 2);
        let plus = s.rows.iter().find(|r| r.values[0] == 1.0).unwrap();
        assert!((plus.probability - 0.5).abs() < 1e-15);
        assert!((s.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projector_state_is_certain() {
        let mut rng = random::rng(44);
        let k = Observable::new("K", random::hermitian(4, &mut rng), 1e-12).unwrap();
        let b = build(&[k]);
        let rho = QuantumDensity { matrix: b.matrix(0, 0) };
        let s = direct_born_oracle(&rho, &b.basis).unwrap();
        assert!((s.rows[0].probability - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pipelines_agree_d6() {
        let mut rng = random::rng(6);
        let k = Observable::new("K", random::hermitian(6, &mut rng), 1e-12).unwrap();
        let b = build(&[k]);
        for _ in 0..10 {
            let rho = random::mixed_density(6, &mut rng);
            let a = born_spectrum_quantum(&rho, &b, false).unwrap();
            let o = direct_born_oracle(&rho, &b.basis).unwrap();
            assert!(a.max_abs_difference(&o).unwrap() <= 1e-12);
        }
    }
}
