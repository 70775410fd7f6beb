//! Born-rule spectra computed three ways: from eigendensities of quantum
//! superoperators, from Koopman modes in action-angle variables, and from
//! level sets of a single classical observable, each checked against an
//! independent oracle.

pub mod classical;
pub mod error;
pub mod levelset;
pub mod numerics;
pub mod quantum;
pub mod report;
pub mod selftest;
pub mod spectrum;

pub use error::{Error, Result};
