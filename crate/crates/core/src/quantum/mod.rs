//! Density-matrix Hilbert space: anticommutator and commutator
//! superoperators of a commuting observable set, their simultaneous
//! eigendensities, the expansion of a state in them, and the Born rule read
//! off the projector coefficients.

pub mod born;
pub mod eigendensity;
pub mod io;
pub mod joint;
pub mod observable;
pub mod superop;

use serde::{Deserialize, Serialize};

pub use born::{born_spectrum_quantum, direct_born_oracle};
pub use eigendensity::{
    eigendensity_basis, expand_density, reconstruct_density, CoefficientTable, EigendensityBasis,
    EigendensityEntry,
};
pub use joint::{joint_spectrum, JointEigenbasis};
pub use observable::{Observable, QuantumDensity};
pub use superop::{build_superoperators, Superoperators};

/// Validation tolerances for the quantum side. `hermiticity` and
/// `commutation` are relative to the operators' largest entries;
/// `degeneracy` is relative to each observable's spectral scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumTolerances {
    pub hermiticity: f64,
    pub commutation: f64,
    pub degeneracy: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for QuantumTolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            commutation: 1e-10,
            degeneracy: 1e-9,
            trace: 1e-10,
            psd: 1e-10,
        }
    }
}
