//! Isotropic mesh-size fields for 3D domains.
//!
//! Given a triangulated boundary surface, this crate computes a scalar
//! size field h(x) over the volume, stored in a 2:1 balanced octree:
//!
//! 1. per-vertex curvature sizing from a fitted second fundamental form,
//! 2. feature (gap) sizing from a pole-filtered Delaunay approximation of
//!    the medial axis,
//! 3. octree refinement against both, driven by an R-tree over the surface
//!    triangles,
//! 4. gradient limiting so that |grad h| <= alpha - 1 everywhere,
//! 5. point queries by first-order Taylor expansion per octant.
//!
//! It also evaluates existing meshes against a field (metric edge lengths,
//! efficiency index, discrete gradation, tetrahedron quality).

pub mod curvature;
pub mod delaunay;
pub mod error;
pub mod field;
pub mod geom;
pub mod limiter;
pub mod medial;
pub mod mesh;
pub mod metrics;
pub mod octree;
pub mod pipeline;
pub mod predicates;
pub mod rtree;
pub mod shapes;
pub mod vtk;

pub use error::{Error, Result};
pub use field::SizeField;
pub use geom::{vec3, Aabb, Vec3};
pub use mesh::SurfaceMesh;
pub use octree::{SizeFieldOctree, SizeFieldParams};
pub use pipeline::{build_size_field, BuildOptions, BuildOutput};

