//! Triangle meshes: data structure, adjacency, surgery, remeshing,
//! simplification, primitives and file I/O.

pub mod adjacency;
pub mod io;
pub mod mesh;
pub mod primitives;
pub mod remesh;
pub mod simplify;
pub mod surgery;

pub use adjacency::{AdjacencyIndex, Edge};
pub use io::{load_mesh, save_mesh};
pub use mesh::{TopologyReport, TriMesh};
pub use remesh::{remesh_pass, remesh_pass_with_stats, RemeshStats};
pub use simplify::{qem_simplify, SimplifyOutcome};
pub use surgery::{edge_collapse, edge_flip, edge_split};
