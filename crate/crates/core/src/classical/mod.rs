//! Classical phase space: canonical action-angle charts, Koopman
//! eigenmodes, the expansion of a phase-space density in them and the
//! resulting Born spectrum of the actions, with direct and Monte Carlo
//! oracles.

pub mod chart;
pub mod density;
pub mod koopman;
pub mod montecarlo;

pub use chart::{
    angle_from_generating_function, conjugacy_residual, jacobian_residual, make_harmonic_chart,
    round_trip_residual, CanonicalChart, HarmonicChart,
};
pub use density::{pushforward_density, ActionAngleDensity, PhaseSpaceDensity};
pub use koopman::{
    born_spectrum_classical, coefficient_table, completeness_residual, koopman_mode,
    marginal_oracle, orthonormality_residual, overlap_coefficient, reconstruct_classical_density,
    weak_eigen_residual, ClassicalCoefficientTable, ClassicalQuadrature, KoopmanMode,
};
pub use montecarlo::{monte_carlo_oracle, McConfig, McResult};
