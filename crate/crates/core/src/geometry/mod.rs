//! Domains and distances: triangle meshes, voxelized solids, neighbor graphs
//! and shortest-interior-path distance matrices.

mod distance;
mod graph;
mod mesh;
mod voxel;

pub use distance::{
    pairwise_distance_histogram, read_matrix_binary, write_matrix_binary, DistanceField, DistanceHistogram,
    DistanceMatrix, MATRIX_MAGIC,
};
pub use graph::{all_pairs_shortest_paths, knn_graph, SparseGraph};
pub use mesh::{barycentric_to_vertices, TriangleMesh};
pub use voxel::{
    make_torus_domain, CornerRule, Torus, VoxelDomain, TORUS_BOX_MAX, TORUS_BOX_MIN, TORUS_COUNTS_FULL,
    TORUS_COUNTS_LOW,
};
