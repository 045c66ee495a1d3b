//! Fast summation of pairwise interactions on the unit sphere using a
//! cubed-sphere quadtree with Chebyshev proxy points: a cluster-particle tree
//! code and a cluster-cluster fast multipole method, plus the applications
//! built on them (Green's function solves, barotropic vorticity, ocean
//! self-attraction and loading).

pub mod apps;
pub mod dilog;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod interp;
pub mod kernels;
pub mod summation;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::{Face, Vec3};
pub use grid::{build_grid, GridKind, SphericalGrid};
pub use kernels::{Biharmonic, BiotSavart, Kernel, KernelKind, Laplace, Potential, Sal, SalForm, SalParams};
pub use summation::{Method, SumReport, TraversalConfig};
pub use tree::{ClusterTree, ParticleSet};
