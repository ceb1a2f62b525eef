//! Scalar fields on the closed disk: smooth closures, nodal P1 functions,
//! and pullbacks of boundary functions along the strip fibers.

use crate::error::{Error, Result};
use crate::fem::Mesh;
use std::fmt;
use std::sync::Arc;

/// A scalar integrand. Strip quadrature evaluates fields at points `xi` that
/// come with the arclength `s` of their boundary foot, which lets a field be
/// given directly as a function of `s` (the pullback form used for potentials
/// concentrated along the boundary).
#[derive(Clone)]
pub enum ScalarField {
    /// A closure of the Cartesian coordinates.
    Smooth(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    /// A P1 finite-element function given by vertex values.
    Nodal { mesh: Arc<Mesh>, values: Arc<Vec<f64>> },
    /// A function of the boundary arclength, constant along strip fibers.
    Pullback(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Smooth(_) => write!(f, "ScalarField::Smooth"),
            ScalarField::Nodal { values, .. } => {
                write!(f, "ScalarField::Nodal({} dofs)", values.len())
            }
            ScalarField::Pullback(_) => write!(f, "ScalarField::Pullback"),
        }
    }
}

impl ScalarField {
    pub fn smooth(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Smooth(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::Smooth(Arc::new(move |_, _| c))
    }

    pub fn nodal(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Domain(format!(
                "nodal field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(ScalarField::Nodal { mesh, values: Arc::new(values) })
    }

    pub fn of_arclength(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Pullback(Arc::new(f))
    }

    /// Evaluate at a point `xi` whose boundary-foot arclength is `s`.
    /// Panics if a nodal field is evaluated outside its mesh; integrand
    /// evaluation points are inside the closed domain by construction.
    pub fn eval(&self, s: f64, xi: [f64; 2]) -> f64 {
        match self {
            ScalarField::Smooth(f) => f(xi[0], xi[1]),
            ScalarField::Nodal { mesh, values } => {
                let (t, lam) = mesh
                    .locate(xi)
                    .unwrap_or_else(|| panic!("nodal field evaluated outside mesh at {xi:?}"));
                let tri = mesh.triangles[t];
                lam[0] * values[tri[0]] + lam[1] * values[tri[1]] + lam[2] * values[tri[2]]
            }
            ScalarField::Pullback(f) => f(s),
        }
    }
}
