//! Numerical laboratory for a parabolic reaction-diffusion problem whose
//! reaction and potential are concentrated in a thin oscillating strip along
//! the boundary, together with its thin-strip limit where those terms become
//! nonlinear boundary conditions.
//!
//! The crate builds P1 finite-element discretizations of both problems on a
//! shared mesh and measures, as the strip width epsilon shrinks:
//! concentrated integrals against their boundary limits, potential operators,
//! linear and nonlinear semigroups, equilibria and their local unstable
//! manifolds, and attractor semidistances.

pub mod attractors;
pub mod equilibria;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod quad;
pub mod semiflow;

pub use error::{Error, Result};
pub use geometry::{Curve, Profile, StripRegion};
pub use harness::{run_suite, ExperimentConfig, RunReport, Suite};
