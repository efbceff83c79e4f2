//! Polar triangulations of star-shaped domains, refinement and level sets of P1 fields.

mod levelset;
mod polar;
mod trimesh;

pub use levelset::{p1_gradient, superlevel_geometry, LevelSetField, LevelSetSlice};
pub use polar::{mesh_star_domain, ring_count, MIN_RINGS, NODES_PER_RING};
pub use trimesh::{triangle_area, MeshLocator, TriMesh};
