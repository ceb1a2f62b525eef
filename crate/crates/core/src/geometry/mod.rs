//! Boundary curves, oscillation profiles, and the boundary strip geometry.

mod curve;
mod profile;
mod strip;

pub use curve::{Curve, Ellipse};
pub use profile::{mu, Profile};
pub use strip::{injectivity_bound, StripRegion};
