//! Bond-percolation engine built around the star-triangle transformation.
//!
//! The crate constructs mixed square/triangular/hexagonal lattices, runs the
//! measure- and connection-preserving cell transformations as whole-lattice
//! sweeps, transports open paths through those sweeps with certified drift
//! bounds, and estimates box-crossing probabilities and cluster statistics
//! with reproducible, counter-seeded Monte Carlo.

pub mod crossing;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod growth;
pub mod lattice;
pub mod params;
pub mod paths;
pub mod rng;
pub mod star_triangle;
pub mod transform;

pub use error::{Error, Result};
pub use geom::{Point, Rect, SQRT3};
pub use lattice::{
    build_lattice, build_mixed_hexagonal, Cell, CellKind, EdgeClass, HexVariant, LatticeKind,
    MixedLattice, NodeKind, VertexId,
};
pub use params::{
    assign_params, beta_const, complete_self_dual, eta_const, eta_prime_const, kappa_hexagonal,
    kappa_square, kappa_triangular, sample_configuration, Configuration, HeightProfile, ParamMap,
    ParamSpec, Triplet,
};
pub use star_triangle::{
    apply_kernel, connection_partition, kernel_s_distribution, kernel_t_distribution,
    verify_star_triangle, CellConfig, CellFamily, ConnectionPartition, KernelDistribution,
    StarTriangleReport,
};
pub use transform::{
    sweep, transform_chain, transform_once, StepOutput, SweepOp, SweepPair, SweepPlan, SweepTrace,
};
