//! Eigenfunctions supported on level sets of a single phase-space
//! observable, built from a conjugate time `tau` with `{tau, K} = 1`, and
//! the Born spectrum they induce.
//!
//! The shipped systems (free particle, quartic oscillator, harmonic
//! oscillator) are integrable; the construction only uses the level-set
//! structure of `K` and makes no claim about chaotic dynamics.

pub mod born;
pub mod maps;
pub mod mode;

pub use born::{born_spectrum_levelset, refinement_shift, LevelSetMethod, LevelSetSpectrum};
pub use maps::{LevelSetSystem, ScalarObservableMap};
pub use mode::{
    conjugate_time_check, mode_overlap, multiplicative_eigen_check, weak_eigen_residual, LevelSetMode,
    TestFunction, WeakQuadrature,
};
