//! Decision procedures for quantum majorization and thermodynamic state conversion.
//!
//! Every question reduces to a semidefinite program solved by the interior-point
//! method in [`sdp`]. Feasibility verdicts are always cross-checked by two routes:
//! a direct channel search and the conditional min-entropy threshold `alpha`.

pub mod covariant;
pub mod error;
pub mod io;
pub mod linalg;
pub mod majorization;
pub mod minentropy;
pub mod quantum;
pub mod sdp;
pub mod selftest;
pub mod thermo;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
