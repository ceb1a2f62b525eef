//! P1 finite elements on graded disk meshes: mesh generation and IO,
//! operator assembly for the strip and boundary-limit problems, reaction
//! maps, and discrete norms.

mod mesh;
mod nonlinearity;
mod system;

pub use mesh::{generate_disk_mesh, BoundaryEdge, Mesh};
pub use nonlinearity::Nonlinearity;
pub use system::{
    assemble_base, assemble_boundary_potential, assemble_strip_potential, locate_strip_nodes,
    potential_operator_gap, FemField, FemSystem, LocatedNode,
};
