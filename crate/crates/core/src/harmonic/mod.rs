//! Discrete equivariant harmonic maps from the genus-2 octagon into ℍ³.

mod hopf;
mod mesh;
mod pullback;
mod ray;
mod solver;

pub use hopf::{
    beltrami, beltrami_summary, dual_distances, far_from_zeros, hopf, hopf_zeros, BeltramiField, HopfSample,
    BELTRAMI_EPS, ZERO_FRACTION, ZERO_RADIUS_EDGES,
};
pub use mesh::{
    build_octagon_mesh, cached_octagon_mesh, disk_matrix, mesh_cache_path, DomainMesh, MeshError, MAX_LEVEL,
};
pub use pullback::{chain_length, pullback_length, LiftedVertex, PullbackError, PullbackLength, PullbackOptions};
pub use ray::{
    degeneration_ray, degeneration_ray_on, FlatComparison, RayError, RayInit, RayOptions, RayReport, RaySample,
};
pub use solver::{
    disk_to_h3, energy, solve_harmonic, EquivariantMap, SolveOptions, SolveReport, SolverError, SweepMode,
};
