//! Lagrangian finite elements: reference elements, meshes, mass matrix and
//! L2 projection.

mod element;
mod io;
mod mesh;
mod structured;

pub use element::{ElementKind, ElementType, FacetShape, LocalFacet, QuadPoint, ShapeEval};
pub use io::{read_mesh, write_mesh};
pub use mesh::{BoundaryFacet, FacetQp, LagrangianMesh, NodalField};
pub use structured::{hex_block, prism_block, quad_patch};
